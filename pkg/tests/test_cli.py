import csv
import io
import json

import pytest

from qlsu.cli import (EXIT_INPUT, EXIT_OK, EXIT_VIOLATION, parse_config,
                      run_command)
from qlsu.criterion import CSV_COLUMNS

CANONICAL = {"coefficient": {"k": 2, "a1": 2, "psi": {"type": "constant", "c": 1}},
             "problem": {"N": 3, "p": 3, "m": 4}}


def _write(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def _with(**blocks):
    cfg = json.loads(json.dumps(CANONICAL))
    for k, v in blocks.items():
        cfg.setdefault(k, {}).update(v)
    return cfg


def _header(text):
    return next(csv.reader(io.StringIO(text)))


def test_check_hypotheses(tmp_path, capsys):
    assert run_command(["check-hypotheses", "-c", _write(tmp_path, CANONICAL)]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["overall"] == "pass"


def test_supercritical_p(tmp_path, capsys):
    cfg = _with(problem={"p": 11})
    assert run_command(["criterion", "-c", _write(tmp_path, cfg)]) == EXIT_INPUT
    assert "((k+1)N+2)/(N-2)" in capsys.readouterr().err


@pytest.mark.parametrize("cfg", [
    {**CANONICAL, "extra": {}},
    {"coefficient": {"k": 2, "a1": 2, "psii": {"type": "constant", "c": 1}}},
    {"coefficient": {"k": 2, "a1": 2, "psi": {"type": "constant", "c": 1, "d": 2}}},
    {"coefficient": {"k": 2, "a1": 2, "psi": {"type": "wiggle"}}},
    {"coefficient": {"k": -1, "a1": 2, "psi": {"type": "constant", "c": 1}}},
    {**CANONICAL, "problem": {"N": 2.5, "p": 3, "m": 4}},
    {**CANONICAL, "numerics": {"s_max": 0}},
    {**CANONICAL, "output": {"format": "xml"}},
])
def test_bad_configs(tmp_path, cfg):
    assert run_command(["criterion", "-c", _write(tmp_path, cfg)]) == EXIT_INPUT


def test_unreadable_config(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run_command(["dual", "-c", str(bad)]) == EXIT_INPUT
    assert run_command(["dual", "-c", str(tmp_path / "missing.json")]) == EXIT_INPUT
    assert run_command(["nonsense", "-c", str(bad)]) == EXIT_INPUT


def test_missing_m(tmp_path):
    cfg = {"coefficient": CANONICAL["coefficient"], "problem": {"N": 3, "p": 3}}
    assert run_command(["criterion", "-c", _write(tmp_path, cfg)]) == EXIT_INPUT


def test_dual_csv(tmp_path):
    out = tmp_path / "dual.csv"
    cfg = _with(numerics={"grid_points": 50})
    assert run_command(["dual", "-c", _write(tmp_path, cfg), "--out", str(out)]) == EXIT_OK
    text = out.read_text()
    assert _header(text) == ["s", "g", "gp", "gpp", "gppp"]
    assert text.splitlines()[1] == "0.0,0.0,1.0,-0.0,-2.0"
    assert len(text.splitlines()) == 52


def test_criterion_csv_and_json(tmp_path, capsys):
    path = _write(tmp_path, _with(numerics={"grid_points": 256}))
    assert run_command(["criterion", "-c", path]) == EXIT_OK
    assert _header(capsys.readouterr().out) == CSV_COLUMNS
    assert run_command(["criterion", "-c", path, "--format", "json"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["verdict"] == "certified"


def test_thresholds_json(tmp_path, capsys):
    assert run_command(["thresholds", "-c", _write(tmp_path, CANONICAL)]) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert {"s1", "s2", "s_bar", "m0_est", "verdict"} <= set(out)


def test_violation_exit_code(tmp_path, capsys):
    cfg = {"coefficient": {"k": 2, "a1": 1, "psi": {"type": "bump", "c": 1, "d": 5, "beta": 2}},
           "problem": {"N": 3, "p": 3, "m": 0.001},
           "numerics": {"s_max": 1e6, "grid_points": 512}}
    assert run_command(["thresholds", "-c", _write(tmp_path, cfg)]) == EXIT_VIOLATION
    assert json.loads(capsys.readouterr().out)["verdict"] == "violated"
    assert run_command(["criterion", "-c", _write(tmp_path, cfg), "--format", "json"]) == EXIT_VIOLATION
    assert json.loads(capsys.readouterr().out)["witness"]["K"] > 0


def test_shoot_csv(tmp_path, capsys):
    assert run_command(["shoot", "-c", _write(tmp_path, CANONICAL)]) == EXIT_OK
    text = capsys.readouterr().out
    assert _header(text) == ["r", "v", "vp", "u", "up"]
    first = [float(x) for x in text.splitlines()[1].split(",")]
    assert first[0] == 0 and abs(first[1] - 17.718009) < 1e-5


def test_verify_json_and_determinism(tmp_path):
    path = _write(tmp_path, _with(numerics={"alpha_grid": 40}))
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run_command(["verify", "-c", path, "--out", str(a)]) == EXIT_OK
    assert run_command(["verify", "-c", path, "--out", str(b)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    out = json.loads(a.read_text())
    assert out["ground_state_count"] == 1
    assert {"alpha_star", "sup_residual", "energy", "decay_rate"} <= set(out)


def test_output_path_from_config(tmp_path):
    target = tmp_path / "t.json"
    cfg = _with(output={"path": str(target)})
    assert run_command(["thresholds", "-c", _write(tmp_path, cfg)]) == EXIT_OK
    assert json.loads(target.read_text())["verdict"] == "certified"


def test_report_canonical(tmp_path, capsys):
    cfg = _with(problem={"m": {"times_m0": 2}})
    assert run_command(["report", "-c", _write(tmp_path, cfg)]) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["verdict"] == "certified" and out["ground_state_count"] == 1
    assert out["hypotheses"] == "pass"


def test_m_sweep(tmp_path, capsys):
    cfg = _with(numerics={"alpha_grid": 30, "grid_points": 256})
    assert run_command(["criterion", "-c", _write(tmp_path, cfg), "--m-sweep", "1:4:2"]) == EXIT_OK
    rows = json.loads(capsys.readouterr().out)["sweep"]
    assert [r["m"] for r in rows] == [1.0, 4.0]
    assert all(r["ground_state_count"] == 1 and r["verdict"] == "certified" for r in rows)


def test_m_sweep_validation(tmp_path):
    path = _write(tmp_path, CANONICAL)
    assert run_command(["criterion", "-c", path, "--m-sweep", "4:1:3"]) == EXIT_INPUT
    assert run_command(["criterion", "-c", path, "--m-sweep", "abc"]) == EXIT_INPUT
    assert run_command(["dual", "-c", path, "--m-sweep", "1:2:2"]) == EXIT_INPUT


def test_parse_config_relative_m():
    cfg = parse_config(_with(problem={"m": {"times_m0": 2}}))
    assert cfg.m == ("times_m0", 2.0)
