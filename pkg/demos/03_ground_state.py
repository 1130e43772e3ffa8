"""
Shooting for the ground state
=============================

Solve v'' + (N-1)/r v' + h(v) = 0 from v(0) = alpha. Small alpha turn
back up before reaching zero, large alpha cross it; the ground state
sits at the single switch between the two. Its pullback u = g(v) solves
the quasi-linear equation.
"""

import numpy as np

from qlsu import (CoefficientSpec, Constant, ProblemParams, build_dual, decay_check, energy,
                  find_ground_state, pullback_and_residual, s_zero, uniqueness_scan)
from qlsu.shooting import shoot

spec = CoefficientSpec(2, 2.0, Constant(1.0))
dt = build_dual(spec)
params = ProblemParams(3, 3.0, 4.0, spec)
s0 = s_zero(params, dt)

for alpha in (1.5 * s0, 4 * s0, 6 * s0, 100 * s0):
    out = shoot(params, dt, alpha)
    print(f"alpha={alpha:9.4f}: {out.classification:13s} event at r={out.profile.r_event:.3f}")

scan = uniqueness_scan(params, dt)
print("scan:", scan.count, "bracket(s)", scan.brackets)

gs = find_ground_state(params, dt, bracket=scan.brackets[0])
pr = gs.profile
print(f"alpha* = {gs.alpha_star:.12f} after {gs.iterations} bisections ({gs.classification})")
print(f"profile reaches v = {pr.v[-1]:.2e} at r = {pr.r[-1]:.2f}, decreasing: "
      f"{bool(np.all(np.diff(pr.v) < 0))}")

pb, res = pullback_and_residual(params, dt, pr)
print(f"u(0) = {pb.u[0]:.9f}, quasi-linear residual {res:.1e}")

e = energy(params, dt, pr)
print(f"I(v) = {e.dual:.10g}, quasi-linear energy of u = {e.quasilinear:.10g}")

d = decay_check(pr, params)
print(f"tail decay rate {d.rate:.5f} vs sqrt(m/a(0)) = {d.expected:.5f}")

# a small table of the profile (every 100th node)
for r, v, u in list(zip(pr.r, pr.v, pb.u))[::100]:
    print(f"  r={r:7.3f}  v={v:.6e}  u={u:.6e}")
