"""
The dual transform g, solving g' = 1/sqrt(a(g)), g(0) = 0.

g is tabulated once with dense output and reused everywhere. Only g itself
is interpolated; g', g'', g''' are recomputed from the ODE identities so
the downstream algebra stays exactly self-consistent.
"""

import bisect
import math
from dataclasses import dataclass

import numpy as np

from .numerics import find_root_bracketed, integrate_ode


@dataclass(frozen=True)
class DualTransform:
    spec: object
    table: object  # Trajectory of (g, G0) over [0, s_max]
    s_max: float
    c0: float
    c1: float

    def __post_init__(self):
        # plain lists for the scalar fast path used by the radial solver
        object.__setattr__(self, "_t", self.table.t.tolist())
        object.__setattr__(self, "_g", self.table.y[:, 0].tolist())
        object.__setattr__(self, "_dg", self.table.f[:, 0].tolist())

    @property
    def g_max(self):
        return float(self.table.y[-1, 0])

    def _check(self, s):
        s = np.asarray(s, dtype=float)
        if np.any(s < 0) or np.any(s > self.s_max):
            raise ValueError(f"abscissa outside the tabulated range [0, {self.s_max}]")
        return s

    def g(self, s):
        s = self._check(s)
        out = self.table(s)[..., 0]
        return float(out) if out.ndim == 0 else out

    def G0(self, s):
        """G0(s) integrated from its nonnegative derivative (no cancellation)."""
        s = self._check(s)
        out = self.table(s)[..., 1]
        return float(out) if out.ndim == 0 else out

    def g_scalar(self, s):
        """Float-only interpolation of g; no range check beyond clamping the cell."""
        t = self._t
        i = bisect.bisect_right(t, s) - 1
        if i < 0 or s > t[-1]:
            raise ValueError(f"abscissa {s} outside the tabulated range [0, {self.s_max}]")
        if i >= len(t) - 1:
            i = len(t) - 2
        t0, t1 = t[i], t[i + 1]
        d = t1 - t0
        u = (s - t0) / d
        v = 1 - u
        return ((1 + 2 * u) * v * v * self._g[i] + u * v * v * d * self._dg[i]
                + u * u * (3 - 2 * u) * self._g[i + 1] - u * u * v * d * self._dg[i + 1])


def _dual_field(spec):
    k = spec.k
    psi = spec.psi

    def field(s, y):
        g = y[0]
        if g < 0:
            g = 0.0
        a = spec.a_scalar(g)
        if not a > 0:
            return np.array([np.nan, np.nan])
        combo = k * psi.scalar(g) - g * float(psi.d1(g))
        return np.array([1.0 / math.sqrt(a), combo / ((k + 2) * a)])

    return field


def build_dual(spec, s_max=1e8, tol=1e-12):
    """Tabulate g (and the comparison function G0) on [0, s_max]."""
    if not s_max > 0:
        raise ValueError("s_max must be positive")
    if not tol > 0:
        raise ValueError("tol must be positive")
    a0 = float(spec.a(0.0))
    if not a0 > 0:
        raise ValueError("coefficient must be positive at 0")
    # both components vanish at 0 like s, so control relative error from the start
    table = integrate_ode(_dual_field(spec), [0.0, 0.0], (0.0, float(s_max)), tol,
                          atol=tol * 1e-12)
    c0 = 1.0 / math.sqrt(a0)
    k, a1 = spec.k, spec.a1
    c1 = ((k + 2) / (2 * math.sqrt(a1))) ** (2 / (k + 2))
    return DualTransform(spec, table, float(s_max), c0, c1)


def eval_g(dt, s, dtype=float):
    """(g, g', g'', g''') at s in [0, s_max].

    g comes from the table; the derivatives from g' = a(g)^(-1/2),
    g'' = -a'(g) g'^4 / 2 and g''' = -a''(g) g'^5 / 2 + a'(g)^2 g'^7.
    With ``dtype=np.longdouble`` the derivative algebra runs in extended
    precision (arrays are returned even for scalar s).
    """
    g = np.asarray(dt.g(s)).astype(dtype)
    if dtype is not float:
        a, ap, app = dt.spec.derivs(g)
        gp = 1 / np.sqrt(a)
        return g, gp, -ap * gp ** 4 / 2, -app * gp ** 5 / 2 + ap ** 2 * gp ** 7
    a, ap, app = dt.spec.derivs(g)
    gp = 1.0 / np.sqrt(a)
    gpp = -0.5 * ap * gp ** 4
    gppp = -0.5 * app * gp ** 5 + ap ** 2 * gp ** 7
    if np.ndim(s) == 0:
        return float(g), float(gp), float(gpp), float(gppp)
    return g, gp, gpp, gppp


def g_inverse(dt, t):
    """The s in [0, s_max] with g(s) = t, located by bracketed root finding."""
    scalar = np.ndim(t) == 0
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    gy = dt.table.y[:, 0]
    if np.any(ts < 0) or np.any(ts > gy[-1]):
        raise ValueError(f"value outside the tabulated range [0, {gy[-1]}]")
    out = np.empty_like(ts)
    for j, target in enumerate(ts):
        i = int(np.searchsorted(gy, target, side="left"))
        if gy[i] == target:
            out[j] = dt.table.t[i]
            continue
        lo, hi = dt.table.t[i - 1], dt.table.t[i]
        out[j] = find_root_bracketed(lambda x: dt.g_scalar(x) - target, lo, hi,
                                     tol=4 * np.spacing(hi))
    return float(out[0]) if scalar else out


@dataclass
class AsymptoticsReport:
    s: float
    diagnostics: list  # (name, limit, value, relative deviation)

    def as_dict(self):
        return {name: {"limit": lim, "value": val, "deviation": dev}
                for name, lim, val, dev in self.diagnostics}


def asymptotic_diagnostics(dt, s=None):
    """Compare growth of g, g^-1 and s g'^2 at ``s`` (default s_max) with
    their limits, which are computed from (k, a1) alone."""
    if s is None:
        s = dt.s_max
    if dt.s_max < 1e6:
        raise ValueError("asymptotic diagnostics need s_max >= 1e6")
    k, a1, c1 = dt.spec.k, dt.spec.a1, dt.c1
    g, gp, _, _ = eval_g(dt, s)
    t = g
    inv_val = s / t ** ((k + 2) / 2)
    if k > 2:
        lim_sgp = 0.0
    elif k == 2:
        lim_sgp = 1.0 / (a1 * c1 ** k)
    else:
        lim_sgp = math.inf

    def dev(val, lim):
        if lim == 0 or math.isinf(lim):
            return math.nan
        return abs(val - lim) / abs(lim)

    rows = [
        ("g/s^(2/(k+2))", c1, g / s ** (2 / (k + 2))),
        ("ginv/t^((k+2)/2)", c1 ** (-(k + 2) / 2), inv_val),
        ("s*g'^2", lim_sgp, s * gp * gp),
    ]
    return AsymptoticsReport(float(s), [(n, lim, float(v), dev(v, lim)) for n, lim, v in rows])
