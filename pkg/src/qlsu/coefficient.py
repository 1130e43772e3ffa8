"""
The diffusion coefficient a(s) = a1*|s|**k + psi(s) and a grid audit of
the structural hypotheses placed on psi.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .numerics import fd_derivative


def _arr(s):
    s = np.asarray(s)
    return s if s.dtype.kind == "f" else s.astype(float)


class Psi:
    """Base class for the lower-order part psi of the coefficient."""

    def value(self, s):
        raise NotImplementedError

    def d1(self, s):
        raise NotImplementedError

    def d2(self, s):
        raise NotImplementedError

    def scalar(self, s):
        """Fast float path used inside ODE right-hand sides."""
        return float(self.value(s))


@dataclass(frozen=True)
class Constant(Psi):
    c: float

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("Constant psi needs c > 0")

    def value(self, s):
        return self.c + 0.0 * _arr(s)

    def d1(self, s):
        return 0.0 * _arr(s)

    def d2(self, s):
        return 0.0 * _arr(s)

    def scalar(self, s):
        return self.c


@dataclass(frozen=True)
class SmoothBump(Psi):
    """psi(s) = c + d*(1 + s^2)^(-beta/2)."""

    c: float
    d: float
    beta: float

    def __post_init__(self):
        if not (self.c > 0 and self.d >= 0 and self.beta > 0):
            raise ValueError("SmoothBump needs c > 0, d >= 0, beta > 0")

    def value(self, s):
        s = _arr(s)
        return self.c + self.d * (1 + s * s) ** (-self.beta / 2)

    def d1(self, s):
        s = _arr(s)
        return -self.d * self.beta * s * (1 + s * s) ** (-self.beta / 2 - 1)

    def d2(self, s):
        s = _arr(s)
        q = 1 + s * s
        return self.d * self.beta * ((self.beta + 1) * s * s - 1) * q ** (-self.beta / 2 - 2)

    def scalar(self, s):
        return self.c + self.d * (1 + s * s) ** (-self.beta / 2)


@dataclass(frozen=True)
class External(Psi):
    """User supplied psi with its first two derivatives."""

    f: Callable
    df: Callable
    ddf: Callable

    def value(self, s):
        return _arr(self.f(s))

    def d1(self, s):
        return _arr(self.df(s))

    def d2(self, s):
        return _arr(self.ddf(s))


@dataclass(frozen=True)
class CoefficientSpec:
    k: float
    a1: float
    psi: Psi

    def __post_init__(self):
        if not self.k > 0:
            raise ValueError("k must be positive")
        if not self.a1 > 0:
            raise ValueError("a1 must be positive")

    def a(self, s):
        s = _arr(s)
        return self.a1 * np.abs(s) ** self.k + self.psi.value(s)

    def a_scalar(self, s):
        return self.a1 * abs(s) ** self.k + self.psi.scalar(s)

    def derivs(self, s):
        """(a, a', a'') at ``s >= 0`` without domain checks (may be inf at 0)."""
        s = _arr(s)
        k, a1 = self.k, self.a1
        with np.errstate(divide="ignore", invalid="ignore"):
            a = a1 * s ** k + self.psi.value(s)
            ap = k * a1 * s ** (k - 1) + self.psi.d1(s)
            if k == 1:
                app = self.psi.d2(s) + 0.0 * s
            else:
                app = k * (k - 1) * a1 * s ** (k - 2) + self.psi.d2(s)
        return a, ap, app


def eval_a(spec, s):
    """Return (a, a', a'') at s > 0.

    s = 0 is accepted for k >= 2, where a'' stays finite.
    """
    arr = _arr(s)
    if np.any(arr < 0) or (np.any(arr == 0) and spec.k < 2):
        raise ValueError("eval_a needs s > 0 (s = 0 allowed only for k >= 2)")
    out = spec.derivs(arr)
    if not all(np.all(np.isfinite(v)) for v in out):
        raise ValueError("coefficient not finite on the requested abscissas")
    if np.ndim(s) == 0:
        return tuple(float(v) for v in out)
    return out


# --------------------------------------------------------------------------
# hypothesis audit

PASS, FAIL, INCONCLUSIVE = "pass", "fail", "inconclusive"


@dataclass
class Verdict:
    status: str
    detail: str = ""
    witness: Optional[float] = None

    def __post_init__(self):
        if self.status == FAIL and self.witness is None:
            raise ValueError("a failing verdict needs a witness abscissa")


@dataclass
class HypothesisReport:
    mode: str
    nu_est: float
    monotone_combo_min: float
    alpha_est: Optional[float]
    psi_inf_est: Optional[float]
    tail_diagnostics: list = field(default_factory=list)
    verdicts: dict = field(default_factory=dict)

    @property
    def overall(self):
        states = [v.status for v in self.verdicts.values()]
        if FAIL in states:
            return FAIL
        if INCONCLUSIVE in states:
            return INCONCLUSIVE
        return PASS

    def to_dict(self):
        return {
            "mode": self.mode,
            "nu_est": self.nu_est,
            "monotone_combo_min": self.monotone_combo_min,
            "alpha_est": self.alpha_est,
            "psi_inf_est": self.psi_inf_est,
            "tail_diagnostics": [[n, v] for n, v in self.tail_diagnostics],
            "verdicts": {k: {"status": v.status, "detail": v.detail, "witness": v.witness}
                         for k, v in self.verdicts.items()},
            "overall": self.overall,
        }


def _last_decade(grid):
    return grid >= grid[-1] / 10


def _limit_zero(name, s, q, threshold):
    """Judge lim q = 0 from the last decade of grid values."""
    tail = _last_decade(s)
    qa = np.abs(q[tail])
    end = float(qa[-1])
    if not np.all(np.isfinite(qa)):
        bad = s[tail][~np.isfinite(qa)][0]
        return Verdict(FAIL, f"{name} not finite", float(bad))
    nonincreasing = np.all(np.diff(qa) <= 1e-12 * max(qa[0], 1e-300))
    if nonincreasing and end < threshold:
        return Verdict(PASS, f"{name} -> 0 (tail value {end:.3g})")
    if qa[-1] > 2 * qa[0] and qa[-1] > threshold:
        return Verdict(FAIL, f"{name} grows over the last decade ({qa[0]:.3g} -> {end:.3g})",
                       float(s[-1]))
    return Verdict(INCONCLUSIVE, f"{name} tail not settled (tail value {end:.3g})")


def _limit_finite_positive(name, s, q, threshold):
    """Judge 0 < lim q < inf from the last decade of grid values."""
    tail = _last_decade(s)
    qt = q[tail]
    start, end = float(qt[0]), float(qt[-1])
    if not np.all(np.isfinite(qt)):
        return Verdict(FAIL, f"{name} not finite", float(s[tail][~np.isfinite(qt)][0]))
    if end <= 0:
        return Verdict(FAIL, f"{name} tail value {end:.3g} not positive", float(s[-1]))
    if end > 2 * start:
        return Verdict(FAIL, f"{name} diverges ({start:.3g} -> {end:.3g})", float(s[-1]))
    if end < start / 2:
        return Verdict(FAIL, f"{name} decays to zero ({start:.3g} -> {end:.3g})", float(s[-1]))
    variation = float(np.max(qt) - np.min(qt)) / abs(end)
    if variation < threshold:
        return Verdict(PASS, f"{name} -> {end:.6g}")
    return Verdict(INCONCLUSIVE, f"{name} still varying by {variation:.3g} over the last decade")


def check_hypotheses(spec, grid=None, mode="strict", p=None, threshold=1e-3,
                     fd_rtol=1e-6):
    """Evaluate the growth and sign hypotheses on psi over ``grid``.

    ``mode="strict"`` checks inf psi > 0, k psi - s psi' >= 0 and the tail
    limits matching the size of k; ``mode="relaxed"`` (0 < k < 2 only, needs
    ``p``) checks the four weaker conditions that may replace them. Limits
    pass only when the tail quantity decreases monotonically over the last
    decade and ends below ``threshold``.
    """
    if grid is None:
        grid = np.logspace(-3, 8, 1101)
    s = np.asarray(grid, dtype=float)
    if s.ndim != 1 or len(s) < 2 or np.any(np.diff(s) <= 0) or s[0] < 0:
        raise ValueError("grid must be a nonempty increasing set of abscissas >= 0")
    if s[-1] < 1e6:
        raise ValueError("grid too short: the largest abscissa must be >= 1e6")
    if mode not in ("strict", "relaxed"):
        raise ValueError("mode must be 'strict' or 'relaxed'")
    k = spec.k
    if mode == "relaxed":
        if not 0 < k < 2:
            raise ValueError("relaxed mode applies to 0 < k < 2 only")
        if p is None:
            raise ValueError("relaxed mode needs the exponent p")

    psi = spec.psi.value(s)
    dpsi = spec.psi.d1(s)
    ddpsi = spec.psi.d2(s)
    combo = k * psi - s * dpsi
    nu_est = float(np.min(psi))
    combo_min = float(np.min(combo))
    verdicts = {}
    tails = []

    if isinstance(spec.psi, External):
        verdicts["derivative-consistency"] = _fd_audit(spec.psi, s, fd_rtol)

    def positivity(name, values, strict):
        bad = values <= 0 if strict else values < -1e-12 * np.maximum(1, np.abs(psi))
        if np.any(bad):
            i = int(np.argmax(bad))
            return Verdict(FAIL, f"{name} violated ({values[i]:.3g})", float(s[i]))
        return Verdict(PASS, f"{name} holds on the grid (min {np.min(values):.6g})")

    alpha_est = None
    psi_inf_est = None
    if mode == "strict":
        inf_ok = positivity("inf psi > 0", psi, strict=True)
        combo_ok = positivity("k psi - s psi' >= 0", combo, strict=False)
        verdicts["general-ip-1"] = _merge(inf_ok, combo_ok)
        if k > 2:
            qs = {
                "s^((2-k)/2) psi": s ** ((2 - k) / 2) * psi,
                "s^((4-k)/2) psi'": s ** ((4 - k) / 2) * dpsi,
                "s^((6-k)/2) psi''": s ** ((6 - k) / 2) * ddpsi,
            }
            parts = [_limit_zero(n, s, q, threshold) for n, q in qs.items()]
            tails += [(n, float(q[-1])) for n, q in qs.items()]
            verdicts["k-mag-2"] = _merge(*parts)
        else:
            qs = {"s psi'": s * dpsi, "s^2 psi''": s * s * ddpsi}
            parts = [_limit_finite_positive("psi", s, psi, threshold)]
            parts += [_limit_zero(n, s, q, threshold) for n, q in qs.items()]
            tails += [("psi", float(psi[-1]))] + [(n, float(q[-1])) for n, q in qs.items()]
            verdicts["k-min-2"] = _merge(*parts)
            psi_inf_est = float(psi[-1])
            alpha_est = float(combo[-1])
    else:
        verdicts["coercivity"] = positivity("a > 0", spec.a(s), strict=True)
        verdicts["combo-nonnegative"] = positivity("k psi - s psi' >= 0", combo, strict=False)
        verdicts["combo-liminf"] = _limit_finite_positive(
            "k psi - s psi'", s, combo, threshold)
        if verdicts["combo-liminf"].status == INCONCLUSIVE and combo[_last_decade(s)].min() > 0:
            # liminf >= alpha > 0 only needs a positive floor, not a limit
            verdicts["combo-liminf"] = Verdict(
                PASS, f"k psi - s psi' stays >= {combo[_last_decade(s)].min():.6g} on the tail")
        ratio_k = combo / s ** k
        verdicts["combo-sublinear"] = _limit_zero("(k psi - s psi')/s^k", s, ratio_k, threshold)
        bound = 2 * k * (p + 1 - k) / (2 - k)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = ((k - 1) * s * dpsi - s * s * ddpsi) / combo
        verdicts["curvature-ratio"] = _ratio_below(
            "((k-1)s psi' - s^2 psi'')/(k psi - s psi')", s, ratio, bound, threshold)
        tails += [("k psi - s psi'", float(combo[-1])),
                  ("(k psi - s psi')/s^k", float(ratio_k[-1])),
                  ("curvature ratio", float(ratio[-1]))]
        alpha_est = float(np.min(combo[_last_decade(s)]))
        psi_inf_est = float(psi[-1])

    return HypothesisReport(mode, nu_est, combo_min, alpha_est, psi_inf_est, tails, verdicts)


def _ratio_below(name, s, q, bound, threshold):
    tail = _last_decade(s)
    qt = q[tail]
    end = float(qt[-1])
    if not np.all(np.isfinite(qt)):
        return Verdict(INCONCLUSIVE, f"{name} not finite on the tail")
    spread = float(np.max(qt) - np.min(qt))
    settled = spread < threshold * max(1.0, abs(end))
    if settled and end < bound:
        return Verdict(PASS, f"{name} -> {end:.3g} < {bound:.3g}")
    if settled:
        return Verdict(FAIL, f"{name} -> {end:.3g} >= {bound:.3g}", float(s[-1]))
    if np.all(qt < bound) and np.all(np.diff(np.abs(qt - np.min(qt))) <= 0):
        return Verdict(PASS, f"{name} settling below {bound:.3g} (tail {end:.3g})")
    return Verdict(INCONCLUSIVE, f"{name} tail not settled (tail value {end:.3g})")


def _merge(*parts):
    for status in (FAIL, INCONCLUSIVE):
        for v in parts:
            if v.status == status:
                return Verdict(status, "; ".join(x.detail for x in parts), v.witness)
    return Verdict(PASS, "; ".join(x.detail for x in parts))


def _fd_audit(psi, s, rtol):
    """Compare user-supplied psi', psi'' with central differences."""
    probe = s[(s > 1e-6)][:: max(1, len(s) // 200)]
    worst, where = 0.0, None
    for x in probe:
        h = 1e-4 * x
        d1 = fd_derivative(lambda t: float(psi.value(t)), x, 1, h)
        d2 = fd_derivative(lambda t: float(psi.d1(t)), x, 1, h)
        for fd, an, scale in ((d1, float(psi.d1(x)), abs(float(psi.value(x))) / x),
                              (d2, float(psi.d2(x)), abs(float(psi.value(x))) / x ** 2)):
            err = abs(fd - an) / max(abs(an), scale, 1e-300)
            if err > worst:
                worst, where = err, float(x)
    if worst > rtol:
        return Verdict(FAIL, f"supplied derivatives disagree with finite differences "
                             f"(relative error {worst:.3g})", where)
    return Verdict(PASS, f"supplied derivatives agree with finite differences ({worst:.2g})")
