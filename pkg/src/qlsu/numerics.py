"""
Numerical kernels: adaptive Runge-Kutta integration with Hermite dense
output, bracketed root finding and central finite differences.

Everything here is pure; evaluators passed in must be safe to call
concurrently.
"""

import math
from dataclasses import dataclass

import numpy as np


class IntegrationError(RuntimeError):
    """Raised when the step size underflows or the field stops being finite."""

    def __init__(self, message, reached):
        super().__init__(f"{message} (reached t={reached!r})")
        self.reached = reached


# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = _B - np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640,
                    -92097 / 339200, 187 / 2100, 1 / 40])
# quartic correction of the DP5 continuous extension over cubic Hermite
_D = np.array([-12715105075 / 11282082432, 0.0, 87487479700 / 32700410799,
               -10690763975 / 1880347072, 701980252875 / 199316789632,
               -1453857185 / 822651844, 69997945 / 29380423])


@dataclass(frozen=True)
class Trajectory:
    """Accepted integration nodes with a C1 cubic Hermite interpolant.

    ``t`` is strictly increasing, ``y`` and ``f`` have shape (n, dim) and
    ``f[i]`` is the field evaluated at ``(t[i], y[i])``.
    """

    t: np.ndarray
    y: np.ndarray
    f: np.ndarray
    tol: float
    stopped: bool = False

    @property
    def span(self):
        return float(self.t[0]), float(self.t[-1])

    def _locate(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi = self.span
        if np.any(x < lo) or np.any(x > hi):
            raise ValueError(f"abscissa outside trajectory span [{lo}, {hi}]")
        i = np.clip(np.searchsorted(self.t, x, side="right") - 1, 0, len(self.t) - 2)
        return x, i

    def __call__(self, x):
        """State at ``x`` (scalar or array); shape (..., dim)."""
        x, i = self._locate(x)
        t0, t1 = self.t[i], self.t[i + 1]
        dt = (t1 - t0)[..., None]
        u = ((x - t0) / (t1 - t0))[..., None]
        h00 = (1 + 2 * u) * (1 - u) ** 2
        h10 = u * (1 - u) ** 2
        h01 = u * u * (3 - 2 * u)
        h11 = u * u * (u - 1)
        return (h00 * self.y[i] + h10 * dt * self.f[i]
                + h01 * self.y[i + 1] + h11 * dt * self.f[i + 1])

    def derivative(self, x):
        """Derivative of the interpolant (not the field) at ``x``."""
        x, i = self._locate(x)
        t0, t1 = self.t[i], self.t[i + 1]
        dt = (t1 - t0)[..., None]
        u = ((x - t0) / (t1 - t0))[..., None]
        d00 = 6 * u * (u - 1) / dt
        d10 = (1 - u) * (1 - 3 * u)
        d01 = -d00
        d11 = u * (3 * u - 2)
        return (d00 * self.y[i] + d10 * self.f[i]
                + d01 * self.y[i + 1] + d11 * self.f[i + 1])


def _initial_step(field, t0, y0, f0, direction, order, rtol, atol):
    scale = atol + rtol * np.abs(y0)
    d0 = np.max(np.abs(y0) / scale)
    d1 = np.max(np.abs(f0) / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + direction * h0 * f0
    f1 = np.asarray(field(t0 + direction * h0, y1), dtype=float)
    d2 = np.max(np.abs(f1 - f0) / scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / (order + 1))
    return min(100 * h0, h1)


def integrate_ode(field, init, span, tol, atol=None, stop=None,
                  max_steps=1_000_000, first_step=None, max_step=np.inf):
    """Integrate ``y' = field(t, y)`` over ``span`` with Dormand-Prince 5(4).

    Local error per step is kept below ``atol + tol*|y|`` componentwise
    (``atol`` defaults to ``tol``), using PI step-size control. The same
    bound is imposed on the cubic Hermite interpolant at each step midpoint,
    so dense output is as accurate as the nodes. ``stop``,
    if given, is called as ``stop(t, y, f)`` after every accepted step and
    ends the integration early when it returns True.

    Returns a :class:`Trajectory`; raises :class:`IntegrationError` on step
    size underflow or a non-finite field value.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    t0, t_end = float(span[0]), float(span[1])
    if t_end == t0:
        raise ValueError("degenerate integration span")
    direction = 1.0 if t_end > t0 else -1.0
    rtol = float(tol)
    atol = rtol if atol is None else np.asarray(atol, dtype=float)

    y = np.atleast_1d(np.asarray(init, dtype=float)).copy()
    f = np.asarray(field(t0, y), dtype=float).reshape(y.shape)
    if not np.all(np.isfinite(f)):
        raise IntegrationError("field not finite at initial point", t0)

    ts, ys, fs = [t0], [y], [f]
    t = t0
    h = first_step or _initial_step(field, t0, y, f, direction, 5, rtol, atol)
    h = min(h, abs(t_end - t0), max_step)
    err_old = 1e-4
    beta = 0.04
    expo = 0.2 - 0.75 * beta
    stopped = False
    k = [None] * 7

    for _ in range(max_steps):
        if h < 10 * np.spacing(abs(t)) or h < 1e-300:
            raise IntegrationError("step size underflow", t)
        last = h >= abs(t_end - t)
        if last:
            h = abs(t_end - t)
        hs = direction * h
        k[0] = f
        for s in range(1, 7):
            ys_ = y + hs * sum(a * k[j] for j, a in enumerate(_A[s]) if a != 0.0)
            k[s] = np.asarray(field(t + _C[s] * hs, ys_), dtype=float).reshape(y.shape)
        y_new = ys_
        f_new = k[6]
        if not (np.all(np.isfinite(y_new)) and np.all(np.isfinite(f_new))):
            h *= 0.25
            last = False
            continue
        err_vec = hs * sum(e * kk for e, kk in zip(_E, k) if e != 0.0)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        # Hermite midpoint error is |h * sum(d_i k_i)| / 16
        dense_vec = hs * sum(d * kk for d, kk in zip(_D, k) if d != 0.0) / 16
        err = float(np.max(np.maximum(np.abs(err_vec), np.abs(dense_vec)) / scale))

        if err <= 1.0:
            fac = err ** expo / err_old ** beta if err > 0 else 0.0
            fac = min(5.0, max(0.2, fac / 0.9)) if fac > 0 else 0.2
            err_old = max(err, 1e-4)
            t = t_end if last else t + hs
            y, f = y_new, f_new
            ts.append(t)
            ys.append(y)
            fs.append(f)
            if last:
                break
            if stop is not None and stop(t, y, f):
                stopped = True
                break
            h = min(h / fac, max_step)
        else:
            fac = min(5.0, max(0.2, err ** expo / 0.9))
            h = h / fac
    else:
        raise IntegrationError("maximum number of steps exceeded", t)

    return Trajectory(np.array(ts), np.array(ys), np.array(fs), rtol, stopped)


@dataclass(frozen=True)
class RootResult:
    root: float
    lo: float
    hi: float
    iterations: int
    value: float


def find_root_bracketed(f, lo, hi, tol, secant=True, max_iter=400,
                        full_output=False):
    """Root of ``f`` in ``[lo, hi]`` by bisection with secant acceleration.

    Each iteration shrinks the bracket by at least half and the secant
    point is only used when it lies strictly inside the bracket. Stops once
    the bracket is narrower than ``tol`` (or ``f`` hits an exact zero) and
    returns the bracket end with the smaller ``|f|``.
    """
    lo, hi = float(lo), float(hi)
    if lo > hi:
        lo, hi = hi, lo
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return RootResult(lo, lo, lo, 0, flo) if full_output else lo
    if fhi == 0:
        return RootResult(hi, hi, hi, 0, fhi) if full_output else hi
    if np.sign(flo) == np.sign(fhi):
        raise ValueError(f"invalid bracket: f({lo})={flo} and f({hi})={fhi} share a sign")

    it = 0
    while hi - lo > tol and it < max_iter:
        it += 1
        if secant and flo != fhi:
            xs = hi - fhi * (hi - lo) / (fhi - flo)
            if lo < xs < hi:
                fs = f(xs)
                if fs == 0:
                    return RootResult(xs, xs, xs, it, fs) if full_output else xs
                if np.sign(fs) == np.sign(flo):
                    lo, flo = xs, fs
                else:
                    hi, fhi = xs, fs
                if hi - lo <= tol:
                    break
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        fm = f(mid)
        if fm == 0:
            return RootResult(mid, mid, mid, it, fm) if full_output else mid
        if np.sign(fm) == np.sign(flo):
            lo, flo = mid, fm
        else:
            hi, fhi = mid, fm

    x, fx = (lo, flo) if abs(flo) <= abs(fhi) else (hi, fhi)
    if full_output:
        return RootResult(x, lo, hi, it, fx)
    return x


def fd_derivative(f, s, order=1, h=1e-5):
    """Central-difference estimate of the first or second derivative."""
    if not h > 0:
        raise ValueError("h must be positive")
    if order == 1:
        return (f(s + h) - f(s - h)) / (2 * h)
    if order == 2:
        return (f(s + h) - 2 * f(s) + f(s - h)) / (h * h)
    raise ValueError("order must be 1 or 2")


def log_grid(lo, hi, n):
    """``n`` log-spaced points on [lo, hi]."""
    out = np.exp(np.linspace(math.log(lo), math.log(hi), n))
    out[0], out[-1] = lo, hi
    return out
