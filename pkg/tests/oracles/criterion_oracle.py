"""
mpmath oracle for the criterion quantities in the canonical case
a(s) = 2 s^2 + 1, p = 3.

g comes from inverting the closed-form antiderivative at 40 digits, h'
and h'' from mpmath.diff of h itself (not from any closed form), and K
from its direct definition. Nothing from qlsu is imported.

Run:  python tests/oracles/criterion_oracle.py
"""

import mpmath as mp

mp.mp.dps = 40
P = 3


def s_of_g(g):
    return g * mp.sqrt(2 * g * g + 1) / 2 + mp.asinh(mp.sqrt(2) * g) / (2 * mp.sqrt(2))


def g_of_s(s):
    s = mp.mpf(s)
    if s == 0:
        return mp.mpf(0)
    return mp.findroot(lambda g: s_of_g(g) - s, mp.sqrt(s))


def h(s, m):
    g = g_of_s(s)
    return (g ** P - m * g) / mp.sqrt(2 * g * g + 1)


def K(s, m):
    s = mp.mpf(s)
    h0 = h(s, m)
    h1 = mp.diff(lambda x: h(x, m), s, 1)
    h2 = mp.diff(lambda x: h(x, m), s, 2)
    return (h1 + s * h2) * h0 - s * h1 ** 2


def aux(s):
    s = mp.mpf(s)
    g = g_of_s(s)
    gp = 1 / mp.sqrt(2 * g * g + 1)
    ap, app = 4 * g, mp.mpf(4)
    H1 = (-app * s * g ** 2 * gp ** 3 / 2 + mp.mpf(3) / 4 * ap ** 2 * s * g ** 2 * gp ** 5
          - ap * g * gp ** 2 * (P * s * gp + g) / 2 - P * s * gp + P * g)
    H2 = -ap * s * g * gp ** 3 / 2 + g - P * s * gp
    G0 = s - g * mp.sqrt(2 * g * g + 1) / 2
    return H1, H2, G0


if __name__ == "__main__":
    s1 = s_of_g(mp.mpf(1))
    s0 = s_of_g(mp.mpf(2))
    print("g^-1(1) =", mp.nstr(s1, 17))
    print("g^-1(2) =", mp.nstr(s0, 17))
    H1, H2, G0 = aux(s1)
    print("H1, H2, G0 at g=1:", mp.nstr(H1, 17), mp.nstr(H2, 17), mp.nstr(G0, 17))
    for s in [2 * s0, 10, 100, 1e4]:
        print(f"K(s={mp.nstr(mp.mpf(s), 17)}, m=4) =", mp.nstr(K(s, 4), 17))
    for s in [1e3, 1e6]:
        s = mp.mpf(s)
        kh = s * mp.diff(lambda x: h(x, 4), s) / h(s, 4)
        print(f"Kh(s={mp.nstr(s, 5)}, m=4) =", mp.nstr(kh, 17))
