"""
Radial ground states of the dual semilinear equation -Lap v = h(v) by
shooting on the central height v(0) = alpha, and their pullback u = g(v)
to the quasi-linear equation.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .criterion import H_of, eval_h, h_scalar, s_zero
from .dual import eval_g
from .numerics import IntegrationError, find_root_bracketed, integrate_ode, log_grid

_trapezoid = getattr(np, "trapezoid", None) or np.trapz

GROUND_STATE = "GroundState"
CROSSES_ZERO = "CrossesZero"
FAILS_TO_DECAY = "FailsToDecay"

DEFAULT_FLOOR = 1e-6


def decay_rate(params):
    """Linearised decay rate sqrt(m/a(0)) of the dual equation at v = 0."""
    return math.sqrt(params.m / float(params.spec.a(0.0)))


def default_r_max(params):
    return 50.0 / decay_rate(params)


@dataclass
class RadialProfile:
    r: np.ndarray
    v: np.ndarray
    vp: np.ndarray
    params: object
    alpha: float
    event: str  # "crossing", "turning", "r_max" or "separation"
    r_event: float
    taylor: tuple = (0.0, 0.0, 0.0)  # (r1, c2, c4): v = alpha + c2 r^2 + c4 r^4 on [0, r1]
    trajectory: object = None

    @property
    def r_max(self):
        return float(self.r[-1])

    def sample(self, r):
        """(v, v') at arbitrary radii inside the profile."""
        r = np.asarray(r, dtype=float)
        if np.any(r < 0) or np.any(r > self.r[-1] * (1 + 1e-14)):
            raise ValueError("radius outside the profile")
        r = np.minimum(r, self.r[-1])
        r1, c2, c4 = self.taylor
        v = self.alpha + c2 * r ** 2 + c4 * r ** 4
        vp = 2 * c2 * r + 4 * c4 * r ** 3
        if self.trajectory is not None:
            outer = r >= r1
            if np.any(outer):
                y = self.trajectory(np.clip(r[outer], *self.trajectory.span))
                v = np.where(outer, 0.0, v)
                vp = np.where(outer, 0.0, vp)
                v[outer] = y[..., 0]
                vp[outer] = y[..., 1]
        return v, vp

    def refined(self, per_step=8):
        """Radii that subdivide every stored interval ``per_step`` times."""
        r = self.r
        u = np.linspace(0, 1, per_step, endpoint=False)
        pts = (r[:-1, None] + (r[1:] - r[:-1])[:, None] * u[None, :]).ravel()
        return np.append(pts, r[-1])


@dataclass
class ShootingOutcome:
    alpha: float
    classification: str
    profile: RadialProfile
    r_zero: Optional[float] = None


def _dual_h(params, dt):
    """h with an odd extension to v < 0, only reached inside a crossing step."""
    def h(v):
        if v >= 0:
            return h_scalar(params, dt, v)
        return -h_scalar(params, dt, -v)
    return h


def integrate_radial(params, dt, alpha, r_max=None, tol=1e-10, stop_on_turn=True):
    """Solve v'' + (N-1)/r v' + h(v) = 0, v(0) = alpha, v'(0) = 0.

    The first step off the origin uses v = alpha + c2 r^2 + c4 r^4 with
    c2 = -h(alpha)/(2N) and c4 = -h'(alpha) c2 / (4(N+2)). Integration stops
    at the first zero of v and, with ``stop_on_turn``, as soon as v'
    becomes positive; the event radius is located on the dense output.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    if alpha > dt.s_max:
        raise ValueError(f"alpha={alpha} exceeds the dual table range {dt.s_max}")
    if r_max is None:
        r_max = default_r_max(params)
    if not r_max > 0:
        raise ValueError("r_max must be positive")
    N = params.N
    h = _dual_h(params, dt)
    h0, hp0, _, _ = eval_h(params, dt, alpha)
    c2 = -h0 / (2 * N)
    c4 = -hp0 * c2 / (4 * (N + 2))
    length = 1.0 / math.sqrt(max(abs(hp0), abs(h0) / alpha, 1e-300))
    r1 = min(1e-3 * length, r_max / 10)
    v1 = alpha + c2 * r1 ** 2 + c4 * r1 ** 4
    vp1 = 2 * c2 * r1 + 4 * c4 * r1 ** 3

    def field_(r, y):
        return np.array([y[1], -(N - 1) / r * y[1] - h(y[0])])

    def stop(r, y, f):
        return y[0] <= 0 or (stop_on_turn and y[1] > 0)

    atol = tol * np.array([alpha, alpha / length]) * 1e-3
    traj = integrate_ode(field_, [v1, vp1], (r1, r_max), tol, atol=atol, stop=stop)

    event, r_event = "r_max", float(traj.t[-1])
    if traj.stopped:
        a, b = traj.t[-2], traj.t[-1]
        if traj.y[-1, 0] <= 0:
            event = "crossing"
            r_event = find_root_bracketed(lambda x: traj(x)[0], a, b, 1e-14 * b) \
                if traj.y[-2, 0] > 0 else float(a)
        else:
            event = "turning"
            r_event = find_root_bracketed(lambda x: traj(x)[1], a, b, 1e-14 * b) \
                if traj.y[-2, 1] <= 0 else float(a)

    keep = traj.t < r_event
    r = np.concatenate([[0.0], traj.t[keep]])
    v = np.concatenate([[alpha], traj.y[keep, 0]])
    vp = np.concatenate([[0.0], traj.y[keep, 1]])
    if event in ("crossing", "turning"):
        y_ev = traj(r_event)
        r = np.append(r, r_event)
        v = np.append(v, 0.0 if event == "crossing" else y_ev[0])
        vp = np.append(vp, 0.0 if event == "turning" else y_ev[1])
    return RadialProfile(r, v, vp, params, float(alpha), event, r_event,
                         (r1, c2, c4), traj)


def classify_shot(profile, floor=DEFAULT_FLOOR):
    """Shooting trichotomy; ``floor`` is the decay floor relative to alpha."""
    if profile.event == "crossing":
        return ShootingOutcome(profile.alpha, CROSSES_ZERO, profile, profile.r_event)
    if profile.event == "turning":
        return ShootingOutcome(profile.alpha, FAILS_TO_DECAY, profile)
    v_end, vp_end = profile.v[-1], profile.vp[-1]
    if np.all(profile.v > 0) and v_end < floor * profile.alpha and vp_end < 0:
        return ShootingOutcome(profile.alpha, GROUND_STATE, profile)
    return ShootingOutcome(profile.alpha, FAILS_TO_DECAY, profile)


def shoot(params, dt, alpha, r_max=None, tol=1e-10, floor=DEFAULT_FLOOR):
    return classify_shot(integrate_radial(params, dt, alpha, r_max, tol), floor)


def _workers():
    try:
        return max(1, int(os.environ.get("QLSU_THREADS", "1")))
    except ValueError:
        return 1


def _map(fn, items):
    n = _workers()
    if n == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


@dataclass
class GroundState:
    alpha_star: float
    profile: RadialProfile
    bracket: tuple
    iterations: int
    classification: str


def _separation_profile(lo, hi, rel=1e-2):
    """Truncate the undershooting profile where it leaves the overshooting one."""
    p_lo, p_hi = lo.profile, hi.profile
    r_end = min(p_lo.r_event, p_hi.r_event)
    r = p_lo.r[p_lo.r <= r_end]
    v_lo, vp_lo = p_lo.sample(r)
    v_hi, _ = p_hi.sample(r)
    apart = (np.abs(v_lo - v_hi) > rel * np.abs(v_lo)) | (vp_lo >= 0) | (v_lo <= 0)
    apart[0] = False
    cut = int(np.argmax(apart)) if np.any(apart) else len(r)
    cut = max(cut, 2)
    return RadialProfile(r[:cut], v_lo[:cut], vp_lo[:cut], p_lo.params, p_lo.alpha,
                         "separation", float(r[cut - 1]), p_lo.taylor, p_lo.trajectory)


def find_ground_state(params, dt, bracket=None, tol=None, r_max=None, ode_tol=1e-10,
                      floor=DEFAULT_FLOOR):
    """Bisect the central height between an undershoot and an overshoot.

    ``bracket`` defaults to (1.01 s0, 1e3 s0); ``tol`` defaults to a few
    ulps of the upper end so the profile follows the decaying branch as
    far as double precision allows. The returned profile is the final
    undershoot cut where it separates from the final overshoot.
    """
    if bracket is None:
        s0 = s_zero(params, dt)
        bracket = (1.01 * s0, 1e3 * s0)
    lo, hi = map(float, bracket)
    if tol is None:
        tol = 4 * np.spacing(lo)
    cache = {}

    def sign(alpha):
        out = shoot(params, dt, alpha, r_max, ode_tol, floor)
        cache[alpha] = out
        return {FAILS_TO_DECAY: -1.0, CROSSES_ZERO: 1.0, GROUND_STATE: 0.0}[out.classification]

    s_lo, s_hi = sign(lo), sign(hi)
    if not (s_lo <= 0 <= s_hi) or s_lo == s_hi:
        raise ValueError(
            f"invalid shooting bracket: alpha={lo} is {cache[lo].classification}, "
            f"alpha={hi} is {cache[hi].classification}")
    res = find_root_bracketed(sign, lo, hi, tol, secant=False, full_output=True)
    if res.value == 0:
        gs = cache[res.root]
        return GroundState(res.root, gs.profile, (res.root, res.root), res.iterations,
                           GROUND_STATE)
    out_lo, out_hi = cache[res.lo], cache[res.hi]
    profile = _separation_profile(out_lo, out_hi)
    cls = classify_shot(profile, floor).classification
    if profile.v[-1] < floor * profile.alpha and profile.vp[-1] < 0:
        cls = GROUND_STATE
    return GroundState(0.5 * (res.lo + res.hi), profile, (res.lo, res.hi), res.iterations, cls)


@dataclass
class ScanResult:
    alphas: np.ndarray
    classes: list
    brackets: list
    reverse_transitions: list = field(default_factory=list)

    @property
    def count(self):
        return len(self.brackets)


def uniqueness_scan(params, dt, alpha_grid=None, n=200, r_max=None, ode_tol=1e-10,
                    floor=DEFAULT_FLOOR):
    """Classify shots over ``alpha_grid`` and collect every undershoot to
    overshoot transition; each one brackets a ground state."""
    if alpha_grid is None:
        s0 = s_zero(params, dt)
        alpha_grid = log_grid(1.001 * s0, 1e3 * s0, n)
    alphas = np.asarray(alpha_grid, dtype=float)
    if np.any(np.diff(alphas) <= 0):
        raise ValueError("alpha grid must be increasing")
    outcomes = _map(lambda a: shoot(params, dt, a, r_max, ode_tol, floor), alphas)
    classes = [o.classification for o in outcomes]
    brackets, reverse = [], []
    last_fail = None
    prev = None
    for a, c in zip(alphas, classes):
        if c == FAILS_TO_DECAY:
            if prev == CROSSES_ZERO:
                reverse.append(float(a))
            last_fail = float(a)
        elif c == CROSSES_ZERO and prev in (FAILS_TO_DECAY, GROUND_STATE):
            if last_fail is not None:
                brackets.append((last_fail, float(a)))
            last_fail = None
        prev = c
    return ScanResult(alphas, classes, brackets, reverse)


@dataclass
class Pullback:
    r: np.ndarray
    u: np.ndarray
    up: np.ndarray


def pullback_and_residual(params, dt, profile):
    """u = g(v) and the scaled sup-norm residual of the quasi-linear equation
    -a(u) u'' - (N-1)/r a(u) u' - a'(u) u'^2 / 2 + m u - u^p
    over the interior nodes."""
    r, v, vp = profile.r, profile.v, profile.vp
    if np.any(v <= 0):
        raise ValueError("pullback needs a positive profile")
    N, p, m = params.N, params.p, params.m
    g, gp, gpp, _ = eval_g(dt, v)
    h = np.array([h_scalar(params, dt, x) for x in v])
    with np.errstate(divide="ignore", invalid="ignore"):
        drift_v = np.where(r > 0, (N - 1) * vp / np.where(r > 0, r, 1), 0.0)
    vpp = -drift_v - h
    vpp[r == 0] = -h[r == 0] / N
    u = g
    up = gp * vp
    upp = gpp * vp ** 2 + gp * vpp
    a, ap, _ = params.spec.derivs(u)
    with np.errstate(divide="ignore", invalid="ignore"):
        drift_u = np.where(r > 0, (N - 1) * up / np.where(r > 0, r, 1), (N - 1) * upp)
    res = -a * upp - a * drift_u - 0.5 * ap * up ** 2 + m * u - u ** p
    scaled = np.abs(res) / (1 + np.abs(u) ** p)
    interior = scaled[1:-1] if len(scaled) > 2 else scaled
    return Pullback(r, u, up), float(np.max(interior))


@dataclass
class Energy:
    dual: float
    quasilinear: float
    decayed: bool


def unit_sphere_area(N):
    return 2 * math.pi ** (N / 2) / math.gamma(N / 2)


def energy(params, dt, profile, per_step=8, floor=DEFAULT_FLOOR):
    """I(v) = |S^(N-1)| int (v'^2/2 - H(v)) r^(N-1) dr and the quasi-linear
    energy of u = g(v), both by the trapezoid rule on a refined grid."""
    N, p, m = params.N, params.p, params.m
    r = profile.refined(per_step)
    v, vp = profile.sample(r)
    if np.any(v < 0):
        raise ValueError("energy needs a nonnegative profile")
    w = unit_sphere_area(N) * r ** (N - 1)
    u = dt.g(v)
    gp = 1.0 / np.sqrt(params.spec.a(u))
    up = gp * vp
    dual = _trapezoid((0.5 * vp ** 2 - H_of(params, u)) * w, r)
    quasi = _trapezoid((0.5 * params.spec.a(u) * up ** 2 + 0.5 * m * u ** 2
                      - u ** (p + 1) / (p + 1)) * w, r)
    decayed = bool(profile.v[-1] < floor * profile.alpha)
    return Energy(float(dual), float(quasi), decayed)


@dataclass
class DecayReport:
    status: str  # "ok" or "inconclusive"
    rate: Optional[float]
    expected: float
    relative_deviation: Optional[float]
    fit_range: Optional[tuple] = None


def decay_check(profile, params, tail_level=1e-2, min_points=20):
    """Least-squares slope of log(r^((N-1)/2) v) over the tail where v drops
    below ``tail_level`` of its maximum, against sqrt(m/a(0))."""
    expected = decay_rate(params)
    v_max = float(np.max(profile.v))
    decaying = profile.event in ("separation", "r_max") and profile.vp[-1] < 0
    tail = profile.r[profile.v <= tail_level * v_max]
    if not decaying or len(tail) < 2 or profile.v[-1] > 1e-3 * tail_level * v_max:
        return DecayReport("inconclusive", None, expected, None)
    r = np.linspace(tail[0], profile.r[-1], max(min_points, 200))
    v, _ = profile.sample(r)
    if np.any(v <= 0):
        return DecayReport("inconclusive", None, expected, None)
    y = np.log(v * r ** ((params.N - 1) / 2))
    slope = np.polyfit(r, y, 1)[0]
    rate = -float(slope)
    return DecayReport("ok", rate, expected, abs(rate - expected) / expected,
                       (float(r[0]), float(r[-1])))


def radial_energy(params, dt, profile):
    """E(r) = v'^2/2 + H(v) at the stored nodes; dE/dr = -(N-1) v'^2 / r."""
    v = np.maximum(profile.v, 0.0)
    return 0.5 * profile.vp ** 2 + H_of(params, dt.g(v))
