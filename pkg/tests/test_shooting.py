import math

import numpy as np
import pytest

from qlsu.criterion import eval_h, s_zero
from qlsu.dual import eval_g
from qlsu.numerics import log_grid
from qlsu.shooting import (CROSSES_ZERO, FAILS_TO_DECAY, GROUND_STATE, RadialProfile,
                           classify_shot, decay_check, energy, find_ground_state,
                           integrate_radial, pullback_and_residual, radial_energy, shoot,
                           uniqueness_scan)

# tests/oracles/shooting_oracle.py: scipy DOP853 at rtol 1e-13 on the closed-form g
ALPHA_STAR_M4 = 17.71800942686162


@pytest.fixture(scope="module")
def ground(canonical_params, canonical_dt):
    return find_ground_state(canonical_params, canonical_dt)


def _zero_profile(params):
    r = np.linspace(0, 5, 11)
    z = np.zeros_like(r)
    return RadialProfile(r, z, z, params, 0.0, "r_max", 5.0)


def test_equilibrium_is_flat(canonical_params, canonical_dt):
    s0 = s_zero(canonical_params, canonical_dt)
    pr = integrate_radial(canonical_params, canonical_dt, s0, r_max=20, stop_on_turn=False)
    assert np.max(np.abs(pr.v - s0)) < 1e-9 * s0
    assert classify_shot(pr).classification == FAILS_TO_DECAY


def test_below_s0_rises(canonical_params, canonical_dt):
    s0 = s_zero(canonical_params, canonical_dt)
    for alpha in (0.2 * s0, 0.9 * s0):
        h = eval_h(canonical_params, canonical_dt, alpha)[0]
        pr = integrate_radial(canonical_params, canonical_dt, alpha)
        assert pr.taylor[1] == pytest.approx(-h / (2 * 3))
        assert pr.event == "turning" and pr.v[1] > alpha
        assert classify_shot(pr).classification == FAILS_TO_DECAY


def test_large_alpha_crosses(canonical_params, canonical_dt):
    out = shoot(canonical_params, canonical_dt, 1e4)
    assert out.classification == CROSSES_ZERO
    assert out.r_zero == out.profile.r[-1] and out.profile.v[-1] == 0


def test_oracle_alpha_is_ground_state(canonical_params, canonical_dt):
    # before the unstable mode takes over, the oracle height decays cleanly
    out = shoot(canonical_params, canonical_dt, ALPHA_STAR_M4, r_max=10.0)
    assert out.classification == GROUND_STATE
    assert out.profile.v[-1] < 1e-5


def test_ground_state_matches_oracle(ground, canonical_params):
    assert ground.classification == GROUND_STATE
    assert abs(ground.alpha_star - ALPHA_STAR_M4) < 1e-6
    pr = ground.profile
    assert pr.v[-1] < 1e-6 and pr.v[-1] < 1e-8 * pr.alpha
    assert np.all(pr.v > 0) and np.all(np.diff(pr.v) < 0)


def test_tol_contract(canonical_params, canonical_dt):
    s0 = s_zero(canonical_params, canonical_dt)
    a = find_ground_state(canonical_params, canonical_dt, tol=1e-6)
    b = find_ground_state(canonical_params, canonical_dt, tol=1e-7)
    assert a.bracket[1] - a.bracket[0] <= 1e-6
    assert abs(a.alpha_star - b.alpha_star) <= 1e-6


def test_invalid_bracket(canonical_params, canonical_dt):
    with pytest.raises(ValueError, match="bracket"):
        find_ground_state(canonical_params, canonical_dt, bracket=(100.0, 1000.0))


def test_classification_monotone_near_bracket(ground, canonical_params, canonical_dt):
    lo, hi = ground.bracket
    for d in (1e-9, 1e-6, 1e-3):
        assert shoot(canonical_params, canonical_dt, lo - d).classification == FAILS_TO_DECAY
        assert shoot(canonical_params, canonical_dt, hi + d).classification == CROSSES_ZERO


def test_scan_below_s0(canonical_params, canonical_dt):
    s0 = s_zero(canonical_params, canonical_dt)
    res = uniqueness_scan(canonical_params, canonical_dt, alpha_grid=np.linspace(0.1, s0, 20))
    assert res.count == 0 and set(res.classes) == {FAILS_TO_DECAY}


def test_scan_single_bracket(ground, canonical_params, canonical_dt):
    res = uniqueness_scan(canonical_params, canonical_dt)
    assert res.count == 1 and not res.reverse_transitions
    lo, hi = res.brackets[0]
    assert lo < ground.alpha_star < hi


def test_scan_refined_grid(canonical_params, canonical_dt):
    s0 = s_zero(canonical_params, canonical_dt)
    coarse = uniqueness_scan(canonical_params, canonical_dt, n=200)
    fine = uniqueness_scan(canonical_params, canonical_dt,
                           alpha_grid=log_grid(1.001 * s0, 1e3 * s0, 2000), ode_tol=1e-8)
    assert coarse.count == fine.count == 1


def test_scan_threads_match(canonical_params, canonical_dt, monkeypatch):
    grid = log_grid(5.0, 50.0, 16)
    serial = uniqueness_scan(canonical_params, canonical_dt, alpha_grid=grid)
    monkeypatch.setenv("QLSU_THREADS", "4")
    threaded = uniqueness_scan(canonical_params, canonical_dt, alpha_grid=grid)
    assert serial.classes == threaded.classes and serial.brackets == threaded.brackets


def test_scan_rejects_unsorted(canonical_params, canonical_dt):
    with pytest.raises(ValueError):
        uniqueness_scan(canonical_params, canonical_dt, alpha_grid=[5.0, 4.0])


def test_pullback_equilibrium(canonical_params, canonical_dt):
    s0 = s_zero(canonical_params, canonical_dt)
    pr = integrate_radial(canonical_params, canonical_dt, s0, r_max=5, stop_on_turn=False)
    pb, res = pullback_and_residual(canonical_params, canonical_dt, pr)
    assert np.allclose(pb.u, 2.0, rtol=1e-9)
    assert res < 1e-9


def test_pullback_ground_state(ground, canonical_params, canonical_dt):
    pb, res = pullback_and_residual(canonical_params, canonical_dt, ground.profile)
    assert res <= 1e-6
    assert np.all(np.diff(pb.u) < 0) and np.all(pb.up[1:] < 0)


def test_pullback_rejects_nonpositive(canonical_params, canonical_dt):
    pr = shoot(canonical_params, canonical_dt, 1e3).profile
    with pytest.raises(ValueError):
        pullback_and_residual(canonical_params, canonical_dt, pr)


def test_energy_zero_profile(canonical_params, canonical_dt):
    e = energy(canonical_params, canonical_dt, _zero_profile(canonical_params))
    assert e.dual == 0 and e.quasilinear == 0


def test_energy_ground_state(ground, canonical_params, canonical_dt):
    e = energy(canonical_params, canonical_dt, ground.profile)
    assert e.decayed and e.dual > 0
    assert abs(e.dual - e.quasilinear) <= 1e-8 * (1 + abs(e.dual))


def test_energy_flags_undecayed(canonical_params, canonical_dt):
    pr = shoot(canonical_params, canonical_dt, 8.0).profile
    e = energy(canonical_params, canonical_dt, pr)
    assert not e.decayed
    assert abs(e.dual - e.quasilinear) <= 1e-8 * (1 + abs(e.dual))


def test_radial_energy_nonincreasing(ground, canonical_params, canonical_dt):
    profiles = [ground.profile] + [shoot(canonical_params, canonical_dt, a).profile
                                   for a in (2.0, 8.0, 30.0, 1e3)]
    for pr in profiles:
        E = radial_energy(canonical_params, canonical_dt, pr)
        scale = max(1.0, float(np.max(np.abs(E))))
        assert np.all(np.diff(E) <= 1e-9 * scale)


def test_decay_rate(ground, canonical_params):
    rep = decay_check(ground.profile, canonical_params)
    assert rep.status == "ok" and rep.expected == 2.0
    assert abs(rep.rate - 2.0) <= 0.05 * 2.0


def test_decay_rate_stable_in_r_max(canonical_params, canonical_dt):
    a = find_ground_state(canonical_params, canonical_dt, r_max=25.0)
    b = find_ground_state(canonical_params, canonical_dt, r_max=50.0)
    ra = decay_check(a.profile, canonical_params).rate
    rb = decay_check(b.profile, canonical_params).rate
    assert abs(ra - rb) <= 0.01 * ra


def test_decay_inconclusive_without_tail(canonical_params, canonical_dt):
    pr = shoot(canonical_params, canonical_dt, 8.0).profile
    assert decay_check(pr, canonical_params).status == "inconclusive"


def test_bump3_ground_state(bump3_spec, bump3_dt):
    from qlsu.criterion import ProblemParams
    params = ProblemParams(3, 3.0, 1.0, bump3_spec)
    gs = find_ground_state(params, bump3_dt)
    assert gs.classification == GROUND_STATE
    _, res = pullback_and_residual(params, bump3_dt, gs.profile)
    assert res <= 1e-5
    rep = decay_check(gs.profile, params)
    assert abs(rep.rate - math.sqrt(1.0 / 2.0)) <= 0.05 * math.sqrt(0.5)
