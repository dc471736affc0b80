import json
import subprocess
import sys

import numpy as np
import pytest
from conftest import arc_walk

from diffdrive_topp import io
from diffdrive_topp.cli import main

WIDE = {"v_max": 10.0, "v_r_min": -100, "v_r_max": 100, "v_l_min": -100, "v_l_max": 100}


@pytest.fixture
def work(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def _write(path, text):
    path.write_text(text)
    return str(path)


def _straight_waypoints(work, length=2.0, n=11):
    pts = np.c_[np.linspace(0, length, n), np.zeros(n)]
    return _write(work / "line.csv", "".join(f"{x},{y}\n" for x, y in pts))


def _config(work, data, name="cfg.json"):
    return _write(work / name, json.dumps(data))


def test_lissajous_samples(work):
    assert main(["lissajous", "--out", "lis"]) == 0
    tr = io.read_path("lis.csv")
    assert len(tr) == 10001
    assert (tr.x[0], tr.y[0]) == pytest.approx((0, 0), abs=1e-12)
    assert (tr.x[2500], tr.y[2500]) == pytest.approx((0, 4), abs=1e-9)
    assert tr.param[-1] == pytest.approx(100)


def test_lissajous_bad_resolution(work, capsys):
    assert main(["lissajous", "--resolution", "0"]) == 1
    assert "resolution" in capsys.readouterr().err


def test_plan_straight_is_symmetric(work, capsys):
    path = _straight_waypoints(work)
    assert main(["plan", path, "--out", "run", "--svg", "--no-timings"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["status"] == "optimal" and summary["t_c"] is None
    assert json.loads((work / "run.summary.json").read_text()) == summary
    tt = io.read_trajectory("run.trajectory.csv")
    assert tt.v[0] == 0 and tt.v[-1] == 0
    assert tt.v == pytest.approx(tt.v[::-1], abs=1e-6)
    assert tt.v.max() == pytest.approx(0.6, abs=1e-6)
    assert (work / "run.svg").read_text().startswith("<svg")


def test_plan_outputs_are_byte_identical(work):
    path = _straight_waypoints(work)
    main(["plan", path, "--out", "a", "--no-timings"])
    main(["plan", path, "--out", "b", "--no-timings"])
    for suffix in (".trajectory.csv", ".summary.json"):
        assert (work / f"a{suffix}").read_bytes() == (work / f"b{suffix}").read_bytes()


def test_plan_boundary_above_cap(work, capsys):
    path = _straight_waypoints(work)
    cfg = _config(work, {"v_s": 1.0})
    assert main(["plan", path, "--config", cfg]) == 2
    err = capsys.readouterr().err
    assert err.startswith("error: plan:") and "start speed" in err
    assert not (work / "plan.trajectory.csv").exists()


def test_plan_rejects_bad_config_before_reading(work, capsys):
    cfg = _config(work, {"v_max": 0.6, "colour": "red"})
    assert main(["plan", "does-not-exist.csv", "--config", cfg]) == 1
    assert "unknown config keys: colour" in capsys.readouterr().err


def test_global_flags_before_subcommand(work):
    path = _straight_waypoints(work)
    cfg = _config(work, {"v_max": 0.4})
    assert main(["--config", cfg, "--out", "g", "plan", path]) == 0
    tt = io.read_trajectory("g.trajectory.csv")
    assert tt.v.max() == pytest.approx(0.4, abs=1e-6)


def test_plan_iteration_limit(work):
    path = _straight_waypoints(work)
    cfg = _config(work, {"solver": {"max_iter": 1}})
    assert main(["plan", path, "--config", cfg]) == 3
    assert json.loads((work / "plan.summary.json").read_text())["status"] == "max-iterations"


def test_single_waypoint(work, capsys):
    path = _write(work / "one.csv", "0,0\n")
    assert main(["fit", path]) == 1
    assert "error: read:" in capsys.readouterr().err


def test_fit_collinear(work):
    path = _straight_waypoints(work, 3.0, 16)
    assert main(["fit", path, "--out", "fitted"]) == 0
    tr = io.read_path("fitted.csv")
    assert np.abs(tr.y).max() <= 1e-9 and np.abs(tr.theta).max() <= 1e-9
    assert np.all(np.diff(tr.x) > 0)


def test_fit_rejects_samples(work):
    path = _write(work / "s.csv", "0,0,0,0\n1,0,0,0\n")
    assert main(["fit", path]) == 1


def test_check_round_trip(work, capsys):
    path = _straight_waypoints(work)
    main(["plan", path, "--out", "run"])
    assert main(["check", "run.trajectory.csv", path, "--out", "run"]) == 0
    report = json.loads((work / "run.check.json").read_text())
    assert report["feasible"] and report["violations"] == {}


def test_check_ablated_plan(work, capsys):
    tr = arc_walk(np.random.default_rng(11), 40, turn_scale=2.5, straight_prob=0.0)
    path = _write(work / "curvy.csv", io.format_samples(tr))
    cfg = _config(work, {"disable_angular": True, "disable_joint": True})
    assert main(["plan", path, "--config", cfg, "--out", "abl"]) == 0
    capsys.readouterr()
    assert main(["check", "abl.trajectory.csv", path]) == 2
    out = capsys.readouterr()
    report = json.loads(out.out)
    assert not report["feasible"] and report["violations"].get("angular", 0) > 0
    assert report["chi"] > 1
    assert "angular" in out.err


def test_check_truncated(work, capsys):
    path = _straight_waypoints(work)
    main(["plan", path, "--out", "run"])
    text = (work / "run.trajectory.csv").read_text()
    _write(work / "cut.csv", text[: text.rindex(",")])
    assert main(["check", "cut.csv", path]) == 1
    assert "fields, expected 9" in capsys.readouterr().err


def test_check_length_mismatch(work):
    path = _straight_waypoints(work)
    main(["plan", path, "--out", "run"])
    other = _straight_waypoints(work, 4.0, 21)
    assert main(["check", "run.trajectory.csv", other]) == 1


def _bang_bang(work):
    path = _write(work / "bb.csv", "0,0,0,0\n0.5,0,0,0\n1,0,0,0\n")
    return path, _config(work, WIDE, "wide.json")


def test_oracle_bang_bang(work, capsys):
    path, cfg = _bang_bang(work)
    assert main(["oracle", path, "--config", cfg, "--grid", "1000"]) == 0
    res = json.loads(capsys.readouterr().out)
    assert res["t_f_socp"] == pytest.approx(2.0, abs=1e-6)
    assert -1e-6 <= res["gap"] <= 0.005


def test_oracle_guard(work, capsys):
    path, cfg = _bang_bang(work)
    assert main(["oracle", path, "--config", cfg, "--grid", "100000"]) == 1
    assert "error: oracle:" in capsys.readouterr().err


def test_module_entry_point(work):
    res = subprocess.run(
        [sys.executable, "-m", "diffdrive_topp", "lissajous", "--resolution", "25"],
        capture_output=True, text=True, check=True,
    )
    rows = [ln for ln in res.stdout.splitlines() if not ln.startswith("#")]
    assert len(rows) == 5
    x, y = (float(f) for f in rows[1].split(",")[:2])
    assert (x, y) == pytest.approx((0, 4), abs=1e-12)
