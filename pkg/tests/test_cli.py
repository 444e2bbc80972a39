import json
import subprocess
import sys

import pytest

from reltoa import cli
from reltoa.exceptions import NonConvergence

SUBCOMMANDS = ("density", "moments", "bounds", "position", "suite")


def _config(tmp_path, **overrides):
    cfg = {"state": {"family": "gaussian", "params": {"p0": 1.0, "sigma_p": 0.05}, "mass": 1.0},
           "detector": {"kind": "maximal", "tau": 0.2, "delta": 0.2},
           "x": 30.0, "t": 10.0, "n_times": 512, "n_points": 512}
    cfg.update(overrides)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return str(path)


@pytest.mark.parametrize("command", SUBCOMMANDS)
def test_help(command, capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main([command, "--help"])
    assert exc.value.code == 0
    assert "usage" in capsys.readouterr().out


def test_density_csv_format(tmp_path):
    out = tmp_path / "out"
    assert cli.main(["density", "--config", _config(tmp_path), "--out", str(out)]) == 0
    text = (out / "density.csv").read_bytes().decode()
    lines = text.split("\n")
    assert lines[0] == "t,density" and lines[-1] == "" and "\r" not in text
    t, d = lines[1].split(",")
    assert float(t) == float(format(float(t), ".17g"))
    assert len(lines) == 512 + 2
    meta = json.loads((out / "density.json").read_text())
    assert meta["norm_within_tol"] and meta["route"] == "kernel"
    assert list(meta) == sorted(meta)


@pytest.mark.parametrize("route", ["amplitude", "phillips"])
def test_density_routes(tmp_path, route):
    out = tmp_path / route
    assert cli.main(["density", "--config", _config(tmp_path), "--out", str(out), "--route", route]) == 0
    assert json.loads((out / "density.json").read_text())["route"] == route


def test_route_needs_maximal(tmp_path):
    cfg = _config(tmp_path, detector={"kind": "ideal"})
    assert cli.main(["density", "--config", cfg, "--out", str(tmp_path / "o"), "--route", "phillips"]) == 2
    assert not (tmp_path / "o").exists()


def test_moments_and_position(tmp_path):
    cfg = _config(tmp_path)
    assert cli.main(["moments", "--config", cfg, "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "moments.json").read_text())
    assert rep["cross_check"]["rel_err"] < 1e-3 and rep["within_tol"]
    assert cli.main(["position", "--config", cfg, "--out", str(tmp_path)]) == 0
    meta = json.loads((tmp_path / "position.json").read_text())
    assert meta["newton_wigner_l1"] < 1e-6
    assert (tmp_path / "position.csv").read_text().startswith("x,density\n")


def test_bundled_config_runs(tmp_path):
    assert cli.main(["density", "--out", str(tmp_path)]) == 0


def test_bounds_paper_constants(tmp_path):
    assert cli.main(["bounds", "--suite", "paper-constants", "--out", str(tmp_path)]) == 0
    rows = {r["name"]: r for r in json.loads((tmp_path / "paper_constants.json").read_text())["constants"]}
    assert rows["nonrel_variational"]["computed"] == pytest.approx(0.80, abs=0.02)
    assert rows["levy_ultrarel"]["computed"] == pytest.approx(50.97, abs=0.01)
    assert rows["levy_ultrarel"]["paper_value"] == 51.0
    assert not (tmp_path / "bounds.json").exists()


def test_bounds_state_report(tmp_path):
    assert cli.main(["bounds", "--config", _config(tmp_path), "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "bounds.json").read_text())
    assert rep["fundamental"]["satisfied"] and "ultrarel" in rep


def test_randomized_run_needs_seed(tmp_path):
    out = tmp_path / "o"
    assert cli.main(["bounds", "--n", "3", "--out", str(out)]) == 2
    assert not out.exists()
    assert cli.main(["bounds", "--n", "0", "--seed", "1", "--out", str(out)]) == 2


@pytest.mark.parametrize("bad", [
    "missing.json",
    "malformed",
    {"state": {"family": "sinc", "params": {}}},
    {"state": {"family": "gaussian", "params": {"p0": 0.1, "sigma_p": 0.05}}},
    {"state": {"family": "gaussian", "params": {"p0": 1.0}}},
    {"state": {"family": "gaussian", "params": {"p0": 1.0, "sigma_p": 0.05}}, "detector": {"kind": "lens"}},
    {"state": {"family": "gaussian", "params": {"p0": 1.0, "sigma_p": 0.05}}, "n_times": 3},
])
def test_config_errors(tmp_path, bad):
    path = tmp_path / "bad.json"
    if bad == "malformed":
        path.write_text("{not json")
    elif isinstance(bad, dict):
        path.write_text(json.dumps(bad))
    else:
        path = tmp_path / bad
    out = tmp_path / "o"
    assert cli.main(["density", "--config", str(path), "--out", str(out)]) == 2
    assert not out.exists()


def test_bad_tolerance(tmp_path):
    assert cli.main(["density", "--tol", "-1", "--out", str(tmp_path / "o")]) == 2


def test_numeric_failure_leaves_no_files(tmp_path, monkeypatch):
    def boom(*args, **kwargs):
        raise NonConvergence("forced")
    monkeypatch.setattr(cli, "position_density", boom)
    out = tmp_path / "o"
    assert cli.main(["suite", "--config", _config(tmp_path), "--out", str(out)]) == 3
    assert not out.exists()


def test_repeat_runs_identical(tmp_path):
    cfg = _config(tmp_path)
    for name in ("a", "b"):
        assert cli.main(["suite", "--config", cfg, "--out", str(tmp_path / name), "--n", "2", "--seed", "3"]) == 0
    for f in sorted((tmp_path / "a").iterdir()):
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes(), f.name


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "reltoa.cli", "bounds", "--suite", "paper-constants",
                           "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "paper_constants.json").exists()
