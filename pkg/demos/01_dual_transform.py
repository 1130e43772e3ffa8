"""
The dual transform
==================

The quasi-linear problem with coefficient a(s) = a1 s^k + psi(s) becomes
semilinear after the change of unknown u = g(v), where g' = 1/sqrt(a(g)).
Here we tabulate g for a(s) = 2 s^2 + 1, where g^-1 has a closed form,
and look at how g grows.
"""

import math

import numpy as np

from qlsu import CoefficientSpec, Constant, SmoothBump, build_dual, eval_g, g_inverse
from qlsu.dual import asymptotic_diagnostics

spec = CoefficientSpec(k=2, a1=2.0, psi=Constant(1.0))
dt = build_dual(spec, s_max=1e8, tol=1e-12)
print(f"table: {len(dt.table.t)} nodes on [0, {dt.s_max:g}], c0={dt.c0}, c1={dt.c1:.6f}")

# g^-1(t) = t sqrt(2t^2+1)/2 + asinh(sqrt(2) t)/(2 sqrt(2))
t = np.geomspace(1e-3, 1e3, 7)
s = t * np.sqrt(2 * t * t + 1) / 2 + np.arcsinh(math.sqrt(2) * t) / (2 * math.sqrt(2))
for ti, si in zip(t, s):
    print(f"  g({si:12.6g}) = {dt.g(si):.15g}   exact {ti:.15g}")

# derivatives come from the ODE, not from the interpolant
print("(g, g', g'', g''') at 0:", eval_g(dt, 0.0))
print("g^-1(2) =", g_inverse(dt, 2.0))

# g ~ c1 s^(1/2) and s g'^2 -> 1/(a1 c1^2) for k = 2
for name, lim, val, dev in asymptotic_diagnostics(dt).diagnostics:
    print(f"  {name:18s} limit {lim:.6g}  value {val:.6g}  rel dev {dev:.1e}")

# for k = 3 the last quantity goes to zero instead
bump = build_dual(CoefficientSpec(3, 1.0, SmoothBump(1.0, 1.0, 1.0)))
for s in (1e4, 1e6, 1e8):
    g, gp, _, _ = eval_g(bump, s)
    print(f"  k=3: s g'^2 at s={s:g}: {s * gp * gp:.5f}")
