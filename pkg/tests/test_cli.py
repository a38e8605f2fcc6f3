import json
import os
import subprocess
import sys

import pytest

from penrose_lab import cli
from penrose_lab.report import Report, check_close, emit_report, render


def run_cli(args, tmp_path, name="out.json"):
    out = tmp_path / name
    code = cli.main(list(args) + ["--output", str(out)])
    return code, out


def test_parse_defaults():
    inv = cli.parse_invocation([])
    assert inv.command == "suite"
    assert inv.params["n"] == 3 and inv.params["mass"] == 0.5


def test_parse_flags():
    inv = cli.parse_invocation(["mass", "--n", "4", "--mass", "1", "--radii", "10,20,40"])
    assert inv.command == "mass"
    assert inv.params["n"] == 4 and inv.params["mass"] == 1.0
    assert inv.params["radii"] == [10.0, 20.0, 40.0]


@pytest.mark.parametrize("argv", [["--bogus"], ["mass", "--n", "2"], ["mass", "--mass", "-1"], ["mass", "--quad-order", "2"], ["nope"]])
def test_usage_errors_exit_2(argv, capsys):
    assert cli.main(argv) == 2


def test_config_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nn = 4\nmass = 1.0\nh = 0.002\n")
    inv = cli.parse_invocation(["reflect-check", "--config", str(cfg), "--mass", "0.25"])
    assert inv.params["n"] == 4
    assert inv.params["mass"] == 0.25
    assert inv.params["h"] == 0.002
    assert inv.params["quad_order"] is None


def test_config_errors(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = blue\n")
    assert cli.main(["mass", "--config", str(bad)]) == 2
    assert cli.main(["mass", "--config", str(tmp_path / "missing.cfg")]) == 2


def test_mass_passes(tmp_path):
    code, out = run_cli(["mass"], tmp_path)
    assert code == 0
    data = json.loads(out.read_text())
    assert data["passed"] is True
    assert abs(data["results"]["adm"] - 0.5) < 2.5e-3


def test_mass_unreachable_tolerance_exit_1(tmp_path):
    code, out = run_cli(["mass", "--tol", "1e-12", "--radii", "10,20,40,80"], tmp_path)
    assert code == 1
    data = json.loads(out.read_text())
    failed = [c["name"] for c in data["checks"] if not c["passed"]]
    assert "adm_vs_m" in failed


def test_unwritable_path_exit_3(tmp_path):
    target = tmp_path / "no_such_dir" / "out.json"
    assert cli.main(["fit-asymptotics", "--output", str(target)]) == 3


def test_reflect_check_values(tmp_path):
    code, out = run_cli(["reflect-check"], tmp_path)
    assert code == 0
    res = json.loads(out.read_text())["results"]
    assert res["D"] == pytest.approx(-2.0, abs=1e-12)
    assert res["E"] == pytest.approx(1.0, abs=1e-12)
    assert res["F"] == pytest.approx(0.0, abs=1e-12)
    assert res["jump"] < 1e-6


def test_suite_default(tmp_path):
    code, out = run_cli(["suite"], tmp_path)
    assert code == 0
    data = json.loads(out.read_text())
    assert set(data["results"]) == set(cli.RUNNERS)
    assert all(c["passed"] for c in data["checks"])
    assert "timing" not in data


def test_byte_identical(tmp_path):
    _, a = run_cli(["verify-reilly", "--n", "4"], tmp_path, "a.json")
    _, b = run_cli(["verify-reilly", "--n", "4"], tmp_path, "b.json")
    assert a.read_bytes() == b.read_bytes()


def test_timing_is_separate(tmp_path):
    code, out = run_cli(["schwarzschild", "--timing"], tmp_path)
    data = json.loads(out.read_text())
    assert code == 0 and "schwarzschild" in data["timing"]


def test_csv_flux_table(tmp_path):
    code, out = run_cli(["mass", "--format", "csv"], tmp_path, "flux.csv")
    lines = out.read_text().splitlines()
    assert lines[0] == "r,flux,quad_order"
    assert len(lines) > 2


def test_json_round_trip(tmp_path):
    rep = Report("mass", {"n": 3, "mass": 0.5}, {"adm": 0.1 + 0.2, "list": [1.0, 2.5e-17], "nested": {"x": [[1, 2], [3, 4]]}})
    rep.checks.append(check_close("a", 1.0, 1.0 + 1e-16, 1e-12))
    path = tmp_path / "r.json"
    n = emit_report(rep, "json", str(path))
    assert n == path.stat().st_size
    assert json.loads(path.read_text()) == json.loads(json.dumps(rep.to_dict()))
    assert render(rep) == render(rep)


def test_float_format_17_digits():
    rep = Report("x", {}, {"v": 0.1})
    assert '"v": 0.10000000000000001' in render(rep)


def test_module_entry_point(tmp_path):
    out = tmp_path / "s.json"
    proc = subprocess.run(
        [sys.executable, "-m", "penrose_lab", "schwarzschild", "--n", "5", "--output", str(out)],
        capture_output=True, text=True, env=dict(os.environ),
    )
    assert proc.returncode == 0, proc.stderr
    data = json.loads(out.read_text())
    assert data["results"]["ellipticity"] == "elliptic_positive"
