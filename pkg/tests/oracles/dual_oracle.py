"""
Quadrature oracle for the dual transform of the bump coefficients
a(s) = a1 s^k + 1 + (1 + s^2)^(-1/2): since g' = a(g)^(-1/2), the inverse
is s(t) = int_0^t sqrt(a(x)) dx, evaluated with mpmath.quad.

Run:  python tests/oracles/dual_oracle.py
"""

import mpmath as mp

mp.mp.dps = 30


def s_of_g(t, k, a1):
    a = lambda x: a1 * x ** k + 1 + (1 + x * x) ** mp.mpf(-0.5)
    return mp.quad(lambda x: mp.sqrt(a(x)), [0, 1, t] if t > 1 else [0, t])


if __name__ == "__main__":
    for k in (1, 3):
        for t in ("0.5", "2", "10", "100"):
            print(f"k={k} g={t}: s =", mp.nstr(s_of_g(mp.mpf(t), k, 1), 17))
