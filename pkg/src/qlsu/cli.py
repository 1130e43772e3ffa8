"""
Command-line front end.

    qlsu <subcommand> -c config.json [--out PATH] [--format csv|json] [--m-sweep lo:hi:n]

Exit codes: 0 pass or certified, 1 violation (witness in the output),
2 inconclusive, 3 input or configuration error.
"""

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import coefficient as co
from .criterion import (CERTIFIED, CSV_COLUMNS, INCONCLUSIVE, VIOLATED, ProblemParams,
                        find_thresholds, verify_criterion)
from .dual import asymptotic_diagnostics, build_dual, eval_g
from .numerics import IntegrationError, log_grid
from .shooting import (GROUND_STATE, energy, decay_check, find_ground_state,
                       pullback_and_residual, uniqueness_scan)

EXIT_OK, EXIT_VIOLATION, EXIT_INCONCLUSIVE, EXIT_INPUT = 0, 1, 2, 3

SUBCOMMANDS = ["check-hypotheses", "dual", "criterion", "thresholds", "shoot", "verify", "report"]

_BLOCKS = {
    "coefficient": {"k", "a1", "psi"},
    "problem": {"N", "p", "m"},
    "numerics": {"s_max", "dual_tol", "ode_tol", "grid_points", "r_max", "alpha_grid",
                 "hypothesis_mode"},
    "output": {"format", "path"},
}
_PSI_KEYS = {"constant": {"type", "c"}, "bump": {"type", "c", "d", "beta"}}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    spec: co.CoefficientSpec
    N: Optional[int] = None
    p: Optional[float] = None
    m: object = None  # float, or ("times_m0", factor)
    s_max: float = 1e8
    dual_tol: float = 1e-12
    ode_tol: float = 1e-10
    grid_points: int = 4096
    r_max: Optional[float] = None
    alpha_grid: int = 200
    hypothesis_mode: str = "strict"
    fmt: Optional[str] = None
    path: Optional[str] = None

    def problem(self, m):
        if self.N is None or self.p is None:
            raise ConfigError("problem block needs N and p")
        return ProblemParams(self.N, self.p, m, self.spec)


def _positive(name, x, integer=False):
    if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x) or x <= 0:
        raise ConfigError(f"{name} must be a positive number (got {x!r})")
    if integer and int(x) != x:
        raise ConfigError(f"{name} must be an integer (got {x!r})")
    return int(x) if integer else float(x)


def _reject_unknown(where, got, allowed):
    extra = sorted(set(got) - allowed)
    if extra:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(extra)}")


def _psi(block):
    if not isinstance(block, dict) or "type" not in block:
        raise ConfigError("coefficient.psi must be an object with a 'type'")
    kind = block["type"]
    if kind not in _PSI_KEYS:
        raise ConfigError(f"unknown psi type {kind!r} (expected constant or bump)")
    _reject_unknown("coefficient.psi", block, _PSI_KEYS[kind])
    try:
        if kind == "constant":
            return co.Constant(_positive("psi.c", block.get("c")))
        d = block.get("d")
        if isinstance(d, bool) or not isinstance(d, (int, float)) or d < 0:
            raise ConfigError(f"psi.d must be a nonnegative number (got {d!r})")
        return co.SmoothBump(_positive("psi.c", block.get("c")), float(d),
                             _positive("psi.beta", block.get("beta")))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def parse_config(data):
    """Validate a config mapping; unknown keys are rejected."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    _reject_unknown("config", data, set(_BLOCKS))
    for name, keys in _BLOCKS.items():
        if name in data:
            if not isinstance(data[name], dict):
                raise ConfigError(f"{name} must be an object")
            _reject_unknown(name, data[name], keys)
    if "coefficient" not in data:
        raise ConfigError("missing coefficient block")
    c = data["coefficient"]
    k = _positive("coefficient.k", c.get("k"))
    a1 = _positive("coefficient.a1", c.get("a1"))
    spec = co.CoefficientSpec(k, a1, _psi(c.get("psi")))
    cfg = RunConfig(spec)

    prob = data.get("problem", {})
    if "N" in prob:
        cfg.N = _positive("problem.N", prob["N"], integer=True)
        if cfg.N < 3:
            raise ConfigError(f"problem.N must be >= 3 (got {cfg.N})")
    if "p" in prob:
        cfg.p = _positive("problem.p", prob["p"])
        if cfg.N is not None:
            bound = ((k + 1) * cfg.N + 2) / (cfg.N - 2)
            if not 1 < cfg.p < bound:
                raise ConfigError(f"problem.p={cfg.p} violates the subcritical bound "
                                  f"1 < p < ((k+1)N+2)/(N-2) = {bound:.6g}")
    if "m" in prob:
        m = prob["m"]
        if isinstance(m, dict):
            _reject_unknown("problem.m", m, {"times_m0"})
            cfg.m = ("times_m0", _positive("problem.m.times_m0", m.get("times_m0")))
        else:
            cfg.m = _positive("problem.m", m)

    num = data.get("numerics", {})
    for key in ("s_max", "dual_tol", "ode_tol"):
        if key in num:
            setattr(cfg, key, _positive(f"numerics.{key}", num[key]))
    for key in ("grid_points", "alpha_grid"):
        if key in num:
            setattr(cfg, key, _positive(f"numerics.{key}", num[key], integer=True))
    if num.get("r_max") is not None:
        cfg.r_max = _positive("numerics.r_max", num["r_max"])
    if "hypothesis_mode" in num:
        if num["hypothesis_mode"] not in ("strict", "relaxed"):
            raise ConfigError("numerics.hypothesis_mode must be strict or relaxed")
        cfg.hypothesis_mode = num["hypothesis_mode"]

    out = data.get("output", {})
    if "format" in out:
        if out["format"] not in ("csv", "json"):
            raise ConfigError("output.format must be csv or json")
        cfg.fmt = out["format"]
    if out.get("path") is not None:
        cfg.path = str(out["path"])
    return cfg


def load_config(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from None
    return parse_config(data)


def parse_sweep(text):
    try:
        lo, hi, n = text.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
    except ValueError:
        raise ConfigError(f"--m-sweep expects lo:hi:n (got {text!r})") from None
    if not (0 < lo <= hi and n >= 1):
        raise ConfigError("--m-sweep needs 0 < lo <= hi and n >= 1")
    return log_grid(lo, hi, n) if n > 1 else np.array([lo])


class Context:
    """Lazily built shared objects for one run."""

    def __init__(self, cfg):
        self.cfg = cfg
        self._dt = None
        self._thr = None

    @property
    def dt(self):
        if self._dt is None:
            self._dt = build_dual(self.cfg.spec, self.cfg.s_max, self.cfg.dual_tol)
        return self._dt

    def thresholds(self):
        # thresholds do not depend on m; any positive m will do here
        if self._thr is None:
            self._thr = find_thresholds(self.cfg.problem(1.0), self.dt)
        return self._thr

    def m(self):
        m = self.cfg.m
        if m is None:
            raise ConfigError("problem block needs m")
        if isinstance(m, tuple):
            m0 = self.thresholds().m0_est
            if m0 is None:
                raise ConfigError("m given relative to m0_est, but m0_est is undefined")
            return m[1] * m0
        return m

    def params(self, m=None):
        try:
            return self.cfg.problem(self.m() if m is None else m)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc)) from None


_VERDICT_EXIT = {CERTIFIED: EXIT_OK, VIOLATED: EXIT_VIOLATION, INCONCLUSIVE: EXIT_INCONCLUSIVE,
                 co.PASS: EXIT_OK, co.FAIL: EXIT_VIOLATION}


def _worst(*codes):
    codes = [c for c in codes if c is not None]
    if EXIT_VIOLATION in codes:
        return EXIT_VIOLATION
    return max(codes) if codes else EXIT_OK


def _csv_text(columns, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([repr(float(x)) for x in r])
    return buf.getvalue()


def _json_text(obj):
    return json.dumps(obj, indent=2, default=_json_default) + "\n"


def _json_default(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not JSON serialisable: {type(x)}")


def cmd_check_hypotheses(ctx, fmt):
    cfg = ctx.cfg
    rep = co.check_hypotheses(cfg.spec, mode=cfg.hypothesis_mode, p=cfg.p)
    return _json_text(rep.to_dict()), _VERDICT_EXIT[rep.overall]


def _dual_grid(ctx):
    dt = ctx.dt
    lo = min(1e-3, dt.s_max / 10)
    return np.concatenate([[0.0], log_grid(lo, dt.s_max, ctx.cfg.grid_points)])


def cmd_dual(ctx, fmt):
    dt = ctx.dt
    s = _dual_grid(ctx)
    g, gp, gpp, gppp = eval_g(dt, s)
    if fmt == "csv":
        return _csv_text(["s", "g", "gp", "gpp", "gppp"], zip(s, g, gp, gpp, gppp)), EXIT_OK
    out = {"s_max": dt.s_max, "c0": dt.c0, "c1": dt.c1, "g_max": dt.g_max}
    if dt.s_max >= 1e6:
        out["asymptotics"] = asymptotic_diagnostics(dt).as_dict()
    out["samples"] = {"s": s, "g": g, "gp": gp, "gpp": gpp, "gppp": gppp}
    return _json_text(out), EXIT_OK


def _criterion(ctx, m=None):
    return verify_criterion(ctx.params(m), ctx.dt, n=ctx.cfg.grid_points)


def cmd_criterion(ctx, fmt):
    rep = _criterion(ctx)
    if fmt == "csv":
        return _csv_text(CSV_COLUMNS, rep.rows()), _VERDICT_EXIT[rep.verdict]
    return _json_text(rep.summary()), _VERDICT_EXIT[rep.verdict]


def cmd_thresholds(ctx, fmt):
    rep = _criterion(ctx)
    t = rep.thresholds
    out = {"s1": t.s1, "s2": t.s2, "s_bar": t.s_bar, "m0_est": t.m0_est,
           "verdict": rep.verdict, "m": rep.m, "at_grid_start": t.at_grid_start}
    return _json_text(out), _VERDICT_EXIT[rep.verdict]


def cmd_shoot(ctx, fmt):
    params = ctx.params()
    gs = find_ground_state(params, ctx.dt, r_max=ctx.cfg.r_max, ode_tol=ctx.cfg.ode_tol)
    pr = gs.profile
    pb, res = pullback_and_residual(params, ctx.dt, pr)
    code = EXIT_OK if gs.classification == GROUND_STATE else EXIT_INCONCLUSIVE
    if fmt == "json":
        return _json_text({"alpha_star": gs.alpha_star, "classification": gs.classification,
                           "sup_residual": res, "r": pr.r, "v": pr.v, "vp": pr.vp,
                           "u": pb.u, "up": pb.up}), code
    return _csv_text(["r", "v", "vp", "u", "up"], zip(pr.r, pr.v, pr.vp, pb.u, pb.up)), code


def _verify(ctx, m=None):
    params = ctx.params(m)
    dt, cfg = ctx.dt, ctx.cfg
    scan = uniqueness_scan(params, dt, n=cfg.alpha_grid, r_max=cfg.r_max, ode_tol=cfg.ode_tol)
    out = {"m": params.m, "ground_state_count": scan.count,
           "brackets": [list(b) for b in scan.brackets],
           "alpha_star": None, "sup_residual": None, "energy": None, "decay_rate": None}
    if scan.count == 0:
        out["notes"] = ["no undershoot to overshoot transition on the alpha grid"]
        return out, EXIT_INCONCLUSIVE
    gs = find_ground_state(params, dt, bracket=scan.brackets[0], r_max=cfg.r_max,
                           ode_tol=cfg.ode_tol)
    pr = gs.profile
    _, res = pullback_and_residual(params, dt, pr)
    en = energy(params, dt, pr)
    dec = decay_check(pr, params)
    out.update({
        "alpha_star": gs.alpha_star, "classification": gs.classification,
        "sup_residual": res,
        "energy": {"dual": en.dual, "quasilinear": en.quasilinear, "decayed": en.decayed},
        "decay_rate": dec.rate, "decay_expected": dec.expected, "decay_status": dec.status,
        "profile_decreasing": bool(np.all(np.diff(pr.v) < 0)),
    })
    if scan.count > 1:
        return out, EXIT_VIOLATION
    ok = (gs.classification == GROUND_STATE and res <= 1e-5 and dec.status == "ok"
          and abs(en.dual - en.quasilinear) <= 1e-8 * (1 + abs(en.dual)))
    return out, EXIT_OK if ok else EXIT_INCONCLUSIVE


def cmd_verify(ctx, fmt):
    out, code = _verify(ctx)
    return _json_text(out), code


def cmd_report(ctx, fmt):
    cfg = ctx.cfg
    hyp = co.check_hypotheses(cfg.spec, mode=cfg.hypothesis_mode, p=cfg.p)
    dt = ctx.dt
    rep = _criterion(ctx)
    ver, ver_code = _verify(ctx)
    out = {
        "hypotheses": hyp.overall,
        "hypothesis_verdicts": {k: v.status for k, v in hyp.verdicts.items()},
        "dual": {"s_max": dt.s_max, "c0": dt.c0, "c1": dt.c1},
        "thresholds": rep.thresholds.as_dict(),
        "criterion": rep.summary(),
        "verdict": rep.verdict,
        "ground_state_count": ver["ground_state_count"],
        "verification": ver,
    }
    code = _worst(_VERDICT_EXIT[hyp.overall], _VERDICT_EXIT[rep.verdict], ver_code)
    return _json_text(out), code


def cmd_sweep(ctx, ms):
    rows, codes = [], []
    for m in ms:
        rep = _criterion(ctx, m)
        ver, code = _verify(ctx, m)
        codes += [_VERDICT_EXIT[rep.verdict], code]
        rows.append({"m": float(m), "verdict": rep.verdict,
                     "m_at_least_m0_est": rep.m_at_least_m0,
                     "ground_state_count": ver["ground_state_count"],
                     "alpha_star": ver["alpha_star"]})
    return _json_text({"m0_est": ctx.thresholds().m0_est, "sweep": rows}), _worst(*codes)


_COMMANDS = {
    "check-hypotheses": cmd_check_hypotheses, "dual": cmd_dual, "criterion": cmd_criterion,
    "thresholds": cmd_thresholds, "shoot": cmd_shoot, "verify": cmd_verify,
    "report": cmd_report,
}
_DEFAULT_FORMAT = {"dual": "csv", "criterion": "csv", "shoot": "csv"}


def build_parser():
    ap = argparse.ArgumentParser(prog="qlsu", description=__doc__.strip().splitlines()[0])
    ap.add_argument("command", choices=SUBCOMMANDS)
    ap.add_argument("-c", "--config", required=True, help="JSON run configuration")
    ap.add_argument("--out", help="output file (default: stdout or output.path)")
    ap.add_argument("--format", choices=["csv", "json"])
    ap.add_argument("--m-sweep", metavar="lo:hi:n",
                    help="repeat criterion and shooting scan over log-spaced m")
    return ap


def run_command(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        cfg = load_config(args.config)
        ctx = Context(cfg)
        fmt = args.format or cfg.fmt or _DEFAULT_FORMAT.get(args.command, "json")
        if args.m_sweep:
            if args.command not in ("criterion", "verify", "report"):
                raise ConfigError("--m-sweep applies to criterion, verify and report")
            text, code = cmd_sweep(ctx, parse_sweep(args.m_sweep))
        else:
            text, code = _COMMANDS[args.command](ctx, fmt)
    except (ConfigError, ValueError) as exc:
        print(f"qlsu: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except IntegrationError as exc:
        print(f"qlsu: integration failed: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    path = args.out or cfg.path
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


def main():
    try:
        sys.exit(run_command())
    except BrokenPipeError:
        sys.exit(0)


if __name__ == "__main__":
    main()
