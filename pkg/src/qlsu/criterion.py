"""
Monotonicity test for the dual nonlinearity

    h(s) = g g' (g^(p-1) - m),

i.e. that s h'(s)/h(s) is non-increasing beyond the zero s0 of h. The sign
of its derivative is that of K(s) = (h' + s h'') h - s h'^2, which factors
through the m-independent auxiliary functions H1 and H2.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dual import eval_g, g_inverse
from .numerics import log_grid


@dataclass(frozen=True)
class ProblemParams:
    N: int
    p: float
    m: float
    spec: object

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 3:
            raise ValueError(f"N must be an integer >= 3 (got {self.N})")
        if not self.m > 0:
            raise ValueError(f"m must be positive (got {self.m})")
        bound = self.p_bound
        if not 1 < self.p < bound:
            raise ValueError(
                f"p={self.p} violates the subcritical bound 1 < p < ((k+1)N+2)/(N-2) = {bound:.6g}")

    @property
    def p_bound(self):
        return ((self.spec.k + 1) * self.N + 2) / (self.N - 2)

    @property
    def regime(self):
        """'k>2' when 2 < k < 2p, 'k<=2' when 0 < k <= 2, else None."""
        k = self.spec.k
        if 2 < k < 2 * self.p:
            return "k>2"
        if 0 < k <= 2:
            return "k<=2"
        return None

    def with_m(self, m):
        return ProblemParams(self.N, self.p, m, self.spec)


def _as_out(s, *arrays):
    if np.ndim(s) == 0:
        return tuple(float(a) for a in arrays)
    return tuple(np.asarray(a, dtype=float) for a in arrays)


def _check_positive(s, dt):
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0) or np.any(s > dt.s_max):
        raise ValueError(f"abscissa outside (0, {dt.s_max}]")
    return s


def eval_h(params, dt, s):
    """(h, h', h'', H) at s in (0, s_max], with H the antiderivative of h."""
    s = _check_positive(s, dt)
    p, m = params.p, params.m
    g, gp, gpp, gppp = eval_g(dt, s)
    q = g ** (p - 1) - m
    h = g * gp * q
    hp = (p - 1) * g ** (p - 1) * gp ** 2 + q * (gp ** 2 + g * gpp)
    hpp = (p * (p - 1) * g ** (p - 2) * gp ** 3 + 3 * (p - 1) * g ** (p - 1) * gp * gpp
           + q * (3 * gp * gpp + g * gppp))
    H = g ** (p + 1) / (p + 1) - m * g ** 2 / 2
    return _as_out(s, h, hp, hpp, H)


def h_scalar(params, dt, v):
    """Fast float evaluation of h for the radial solver (v >= 0)."""
    g = dt.g_scalar(v)
    a = dt.spec.a_scalar(g)
    return (g ** params.p - params.m * g) / math.sqrt(a)


def H_of(params, g):
    """H written in terms of u = g(v)."""
    return g ** (params.p + 1) / (params.p + 1) - params.m * g ** 2 / 2


def s_zero(params, dt):
    """The zero of h: s0 = g^-1(m^(1/(p-1)))."""
    target = params.m ** (1 / (params.p - 1))
    if target > dt.g_max:
        raise ValueError(
            f"m^(1/(p-1)) = {target:.6g} exceeds g(s_max) = {dt.g_max:.6g}; rebuild the dual "
            "transform with a larger s_max")
    return g_inverse(dt, target)


def _aux_ld(params, dt, s):
    """H1, H2 and the g-data they use, in extended precision."""
    ld = np.longdouble
    p = ld(params.p)
    g, gp, _, _ = eval_g(dt, s, ld)
    _, ap, app = dt.spec.derivs(g)
    if np.any(g == 0):
        # a' and a'' only ever appear multiplied by powers of g
        ap = np.where(g == 0, 0, ap)
        app = np.where(g == 0, 0, app)
    S = np.asarray(s).astype(ld)
    H1 = (-app * S * g ** 2 * gp ** 3 / 2
          + 3 * ap ** 2 * S * g ** 2 * gp ** 5 / 4
          - ap * g * gp ** 2 * (p * S * gp + g) / 2
          - p * S * gp + p * g)
    H2 = -ap * S * g * gp ** 3 / 2 + g - p * S * gp
    return S, g, gp, H1, H2


def eval_aux(params, dt, s):
    """(H1, H2, G0, R1, R2) at s in [0, s_max].

    G0 is read from the tabulated integral of its derivative. R1 and R2
    are the parts of H1 and H2 carried by psi' and psi''. H1 and H2 are
    small differences of large terms for big s and are formed in extended
    precision.
    """
    s = np.asarray(s, dtype=float)
    if np.any(s < 0) or np.any(s > dt.s_max):
        raise ValueError(f"abscissa outside [0, {dt.s_max}]")
    p, k = params.p, dt.spec.k
    S, g, gp, H1, H2 = _aux_ld(params, dt, s)
    G0 = dt.G0(s)
    psi = dt.spec.psi
    d1, d2, ps = psi.d1(g), psi.d2(g), psi.value(g)
    R1 = (-S * g ** 2 * gp ** 3 * d2 / 2
          + 3 * S * g ** 2 * gp ** 5 * d1 ** 2 / 4
          + 3 * k * S * g * gp ** 3 * d1 / 2
          - 3 * k * S * g * gp ** 5 * ps * d1 / 2
          - g * gp ** 2 * (p * S * gp + g) * d1 / 2)
    R2 = -d1 * S * g * gp ** 3 / 2
    return _as_out(s, H1, H2, G0, R1, R2)


def G0_direct(dt, s):
    """G0 = s - 2/(k+2) g sqrt(a(g)) evaluated literally."""
    g = np.asarray(dt.g(s))
    out = np.asarray(s) - 2 / (dt.spec.k + 2) * g * np.sqrt(dt.spec.a(g))
    return float(out) if np.ndim(s) == 0 else out


def k_numerator(params, dt, s):
    """K(s) through its factorisation in H1 and H2."""
    s = _check_positive(s, dt)
    ld = np.longdouble
    p, m = ld(params.p), ld(params.m)
    S, g, gp, H1, H2 = _aux_ld(params, dt, s)
    r = g ** (p - 1) / m - 1
    K = (m ** 2 * gp ** 3 * (r ** 2 * H1 + (p - 1) * r * H2 - S * (p - 1) ** 2 * gp)).astype(float)
    return float(K) if np.ndim(s) == 0 else K


def k_direct(params, dt, s):
    """K(s) = (h' + s h'') h - s h'^2 straight from the definition.

    Both products agree to many digits at large s, so the whole chain is
    carried in extended precision from the tabulated g.
    """
    s_ = _check_positive(s, dt)
    ld = np.longdouble
    p, m = ld(params.p), ld(params.m)
    g, gp, gpp, gppp = eval_g(dt, s_, ld)
    S = s_.astype(ld)
    q = g ** (p - 1) - m
    h = g * gp * q
    hp = (p - 1) * g ** (p - 1) * gp ** 2 + q * (gp ** 2 + g * gpp)
    hpp = (p * (p - 1) * g ** (p - 2) * gp ** 3 + 3 * (p - 1) * g ** (p - 1) * gp * gpp
           + q * (3 * gp * gpp + g * gppp))
    K = ((hp + S * hpp) * h - S * hp ** 2).astype(float)
    return float(K) if np.ndim(s) == 0 else K


def k_upper_bound(params, dt, s):
    """The bound K < m^2 g'^3 r (r H1 + (p-1) H2), r = g^(p-1)/m - 1,
    valid wherever g^(p-1) > m."""
    p, m = params.p, params.m
    g, gp, _, _ = eval_g(dt, s)
    H1, H2, _, _, _ = eval_aux(params, dt, s)
    r = g ** (p - 1) / m - 1
    out = m ** 2 * gp ** 3 * r * (r * H1 + (p - 1) * H2)
    return float(out) if np.ndim(s) == 0 else out


def kh(params, dt, s, s0=None):
    """s h'(s)/h(s); only defined beyond the zero s0 of h."""
    if s0 is None:
        s0 = s_zero(params, dt)
    if np.any(np.asarray(s) <= s0):
        raise ValueError(f"s h'/h has a pole at s0 = {s0:.6g}; need s > s0")
    h, hp, _, _ = eval_h(params, dt, s)
    out = np.asarray(s) * hp / h
    return float(out) if np.ndim(s) == 0 else out


@dataclass
class Thresholds:
    s1: Optional[float]
    s2: Optional[float]
    s_bar: Optional[float]
    m0_est: Optional[float]
    grid_start: float
    at_grid_start: bool = False

    def as_dict(self):
        return {"s1": self.s1, "s2": self.s2, "s_bar": self.s_bar,
                "m0_est": self.m0_est, "grid_start": self.grid_start,
                "at_grid_start": self.at_grid_start}


def _persistently_negative_from(grid, values):
    nonneg = np.nonzero(~(values < 0))[0]
    if len(nonneg) == 0:
        return float(grid[0])
    last = nonneg[-1]
    if last == len(grid) - 1:
        return None
    return float(grid[last + 1])


def default_threshold_grid(dt, n=4096, start=1e-3):
    return log_grid(start, dt.s_max, n)


def find_thresholds(params, dt, grid=None):
    """s1, s2: first grid points beyond which H1, H2 stay negative; the
    larger is s_bar and m0_est = g(s_bar)^(p-1) is the frequency at which
    s0 reaches s_bar. None where a function is not eventually negative.

    m0_est is only resolved down to the grid start: when H1 and H2 are
    negative on the whole grid, ``at_grid_start`` is set.
    """
    if grid is None:
        grid = default_threshold_grid(dt)
    grid = np.asarray(grid, dtype=float)
    H1, H2, _, _, _ = eval_aux(params, dt, grid)
    s1 = _persistently_negative_from(grid, H1)
    s2 = _persistently_negative_from(grid, H2)
    if s1 is None or s2 is None:
        return Thresholds(s1, s2, None, None, float(grid[0]))
    s_bar = max(s1, s2)
    m0 = dt.g(s_bar) ** (params.p - 1)
    return Thresholds(s1, s2, s_bar, float(m0), float(grid[0]), bool(s_bar == grid[0]))


CERTIFIED, VIOLATED, INCONCLUSIVE = "certified", "violated", "inconclusive"

CSV_COLUMNS = ["s", "g", "h", "hp", "hpp", "K", "Kh", "H1", "H2", "G0", "R1", "R2"]


@dataclass
class CriterionReport:
    m: float
    s0: float
    grid: np.ndarray
    samples: dict
    thresholds: Thresholds
    verdict: str
    witness: Optional[tuple] = None
    tolerance: float = 0.0
    m_at_least_m0: Optional[bool] = None
    consistent: bool = True
    notes: list = field(default_factory=list)

    @property
    def s1(self):
        return self.thresholds.s1

    @property
    def s2(self):
        return self.thresholds.s2

    @property
    def s_bar(self):
        return self.thresholds.s_bar

    @property
    def m0_est(self):
        return self.thresholds.m0_est

    def rows(self):
        cols = [self.samples[c] for c in CSV_COLUMNS]
        return [list(map(float, r)) for r in zip(*cols)]

    def summary(self):
        return {
            "m": self.m, "s0": self.s0, "verdict": self.verdict,
            "witness": None if self.witness is None else
            {"s": self.witness[0], "K": self.witness[1]},
            "tolerance": self.tolerance,
            **self.thresholds.as_dict(),
            "m_at_least_m0_est": self.m_at_least_m0,
            "consistent": self.consistent,
            "notes": self.notes,
        }


def verify_criterion(params, dt, grid=None, n=4096, margin=0.01, threshold_grid=None,
                     rel_tol=1e-10):
    """Scan K on a log grid starting just below s0 and issue a verdict.

    certified: K <= rel_tol * max(1, max|K|) at every sampled s >= s0 and
    H1, H2 are eventually negative on the threshold grid. violated carries
    the first offending (s, K). Anything else is inconclusive.
    """
    s0 = s_zero(params, dt)
    if grid is None:
        grid = log_grid(s0 * (1 - margin), dt.s_max, n)
    grid = np.asarray(grid, dtype=float)

    g, _, _, _ = eval_g(dt, grid)
    h, hp, hpp, _ = eval_h(params, dt, grid)
    H1, H2, G0, R1, R2 = eval_aux(params, dt, grid)
    K = k_numerator(params, dt, grid)
    beyond = grid > s0
    with np.errstate(divide="ignore", invalid="ignore"):
        Kh = np.where(beyond, grid * hp / h, np.nan)
    samples = dict(s=grid, g=g, h=h, hp=hp, hpp=hpp, K=K, Kh=Kh,
                   H1=H1, H2=H2, G0=G0, R1=R1, R2=R2)

    thr = find_thresholds(params, dt, threshold_grid)
    checked = grid >= s0
    notes = []
    Kc = K[checked]
    tol = rel_tol * max(1.0, float(np.max(np.abs(Kc)))) if Kc.size else 0.0
    witness = None
    if not np.all(np.isfinite(Kc)):
        verdict = INCONCLUSIVE
        notes.append("non-finite K on the grid")
    else:
        bad = np.nonzero(Kc > tol)[0]
        if bad.size:
            i = bad[0]
            witness = (float(grid[checked][i]), float(Kc[i]))
            verdict = VIOLATED
        elif thr.s_bar is None:
            verdict = INCONCLUSIVE
            notes.append("K <= 0 on the grid, but H1/H2 are not eventually negative; "
                         "the tail beyond s_max is not controlled")
        else:
            verdict = CERTIFIED

    m_ok = None if thr.m0_est is None else params.m >= thr.m0_est
    consistent = not (m_ok and verdict != CERTIFIED)
    if m_ok is False:
        notes.append("m below m0_est: no a priori expectation for the verdict")
    if thr.at_grid_start:
        notes.append("H1 and H2 negative on the whole threshold grid; m0_est is an upper "
                     "bound set by the grid start")
    return CriterionReport(params.m, float(s0), grid, samples, thr, verdict, witness, tol,
                           m_ok, consistent, notes)
