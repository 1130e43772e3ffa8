"""
Checking monotonicity of s h'(s)/h(s)
=====================================

Uniqueness of the radial ground state follows once K = (h'+s h'')h - s h'^2
is nonpositive beyond the zero s0 of h. K factors through two functions
H1, H2 that do not involve m; once both stay negative past some s_bar,
every m with s0 >= s_bar is covered.
"""

import numpy as np

from qlsu import (CoefficientSpec, Constant, ProblemParams, SmoothBump, build_dual,
                  find_thresholds, kh, s_zero, verify_criterion)
from qlsu.numerics import log_grid

spec = CoefficientSpec(2, 2.0, Constant(1.0))
dt = build_dual(spec)
params = ProblemParams(N=3, p=3.0, m=4.0, spec=spec)

s0 = s_zero(params, dt)
print(f"s0 = {s0:.9f}")
for s in log_grid(1.01 * s0, 1e8, 6):
    print(f"  s h'/h at {s:10.4g}: {kh(params, dt, s):.6f}")

rep = verify_criterion(params, dt)
print("m = 4:", rep.verdict, {k: rep.summary()[k] for k in ("s1", "s2", "m0_est")})
for note in rep.notes:
    print("  note:", note)

# a k = 3 coefficient where H1 turns negative only at a finite s1
bump = CoefficientSpec(3, 1.0, SmoothBump(1.0, 1.0, 1.0))
dtb = build_dual(bump)
base = ProblemParams(3, 3.0, 1.0, bump)
thr = find_thresholds(base, dtb)
print(f"k=3 bump: s1={thr.s1:.4f} s2={thr.s2:.4f} m0_est={thr.m0_est:.5f}")
for m in (thr.m0_est / 10, 2 * thr.m0_est, 10.0):
    r = verify_criterion(base.with_m(m), dtb)
    print(f"  m={m:.4g}: {r.verdict} (m >= m0_est: {r.m_at_least_m0})")

# below m0_est nothing is promised; a large bump in psi can break monotonicity
wobbly = CoefficientSpec(2, 1.0, SmoothBump(1.0, 5.0, 2.0))
dtw = build_dual(wobbly, s_max=1e6)
r = verify_criterion(ProblemParams(3, 3.0, 1e-3, wobbly), dtw, n=512)
print("psi = 1 + 5/(1+s^2), m = 1e-3:", r.verdict, "witness (s, K):", r.witness)
