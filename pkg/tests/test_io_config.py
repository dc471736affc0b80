import json
import os
import stat

import numpy as np
import pytest

from diffdrive_topp import io
from diffdrive_topp.config import Config, config_from_dict, load_config
from diffdrive_topp.errors import InputError
from diffdrive_topp.spline import InitialTrajectory, WaypointPath
from diffdrive_topp.trajectory import TimedTrajectory


def test_defaults_are_the_lissajous_setup():
    cfg = load_config(None)
    assert cfg == Config()
    lim = cfg.limits()
    assert (lim.v_max, lim.a_max, lim.a_n_max, lim.omega_max) == (0.6, 1.0, 0.6, 2.0)
    assert lim.joint.v_r_max == 0.75 and lim.geometry.track_width == 0.35
    assert cfg.solver.backend == "ipm"


def test_partial_config_and_solver_block(tmp_path):
    f = tmp_path / "c.json"
    f.write_text(json.dumps({"v_max": 1, "disable_angular": True, "solver": {"max_iter": 50}}))
    cfg = load_config(f)
    assert cfg.v_max == 1.0 and isinstance(cfg.v_max, float)
    assert cfg.disable_angular and cfg.options().disable_angular
    assert cfg.solver.max_iter == 50


@pytest.mark.parametrize(
    "data, match",
    [
        ({"vmax": 1}, "unknown config keys: vmax"),
        ({"v_max": "fast"}, "must be a number"),
        ({"v_max": True}, "must be a number"),
        ({"disable_joint": 1}, "true or false"),
        ({"degree": 2.5}, "integer"),
        ({"v_max": -1}, "invalid limits"),
        ({"a_min": 0.5}, "invalid limits"),
        ({"resolution": 0}, "resolution"),
        ({"solver": {"backend": "cvx"}}, "backend"),
        ({"solver": {"tolerance": 1}}, "unknown solver keys"),
        ({"solver": {"tol_feas": 0}}, "invalid solver settings"),
        ([1, 2], "JSON object"),
    ],
)
def test_config_rejections(data, match):
    with pytest.raises(InputError, match=match):
        config_from_dict(data)


def test_config_file_errors(tmp_path):
    with pytest.raises(InputError, match="cannot read"):
        load_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{v_max: 1}")
    with pytest.raises(InputError, match="not valid JSON"):
        load_config(bad)


def test_json_number_format():
    text = io.dumps_json({"a": 1 / 3, "b": -0.0, "c": float("nan"), "d": [np.float64(2.5), np.int64(3)], "e": True})
    assert json.loads(text) == {"a": 0.333333333, "b": 0.0, "c": None, "d": [2.5, 3], "e": True}
    assert io.fmt(-0.0) == "0" and io.fmt(1e-20) == "1e-20"


def test_path_autodetect():
    wp = io.parse_path("# waypoints\n0,0\n1,0\n\n2,1\n")
    assert isinstance(wp, WaypointPath) and len(wp.points) == 3
    tr = io.parse_path("0,0,0,0\n1,0,0,0.5\n")
    assert isinstance(tr, InitialTrajectory) and tr.param is None
    tr = io.parse_path("0,0,0,0,0\n1,0,0,0.5,0.5\n")
    assert np.allclose(tr.param, [0, 0.5])


@pytest.mark.parametrize(
    "text, match",
    [
        ("", "no data rows"),
        ("0,0\n1\n", "expected 2 columns"),
        ("0,0,0\n", "3 columns"),
        ("0,a\n", "cannot parse"),
    ],
)
def test_path_rejections(text, match):
    with pytest.raises(InputError, match=match):
        io.parse_path(text, "p.csv")


def test_samples_round_trip():
    tr = InitialTrajectory([0, 1, 2], [0, 0.5, 0], [0, 0.4, -0.4], [0.1, 0.2, 0.1], param=[0, 0.5, 1])
    back = io.parse_path(io.format_samples(tr))
    for name in ("x", "y", "theta", "kappa", "param"):
        assert np.allclose(getattr(back, name), getattr(tr, name))


def _tt():
    return TimedTrajectory(
        t=np.array([0.0, 1.0, 2.0]), x=np.array([0.0, 0.5, 1.0]), y=np.zeros(3), theta=np.zeros(3),
        v=np.array([0.0, 1.0, 0.0]), omega=np.zeros(2), a=np.array([1.0, -1.0]),
        v_r=np.array([0.0, 1.0]), v_l=np.array([0.0, 1.0]), dt=np.ones(2),
    )


def test_trajectory_round_trip():
    text = io.format_trajectory(_tt())
    assert text.splitlines()[0] == "t,x,y,theta,v,omega,a,v_r,v_l"
    assert text.splitlines()[-1] == "2,1,0,0,0,0,0,0,0"
    back = io.parse_trajectory(text)
    assert back.n == 3 and np.array_equal(back.a, [1, -1]) and back.t_f == 2


def test_truncated_trajectory():
    text = io.format_trajectory(_tt())
    cut = text[: text.rindex(",")]  # last row loses a field
    with pytest.raises(InputError, match="t.csv:4: 8 fields, expected 9"):
        io.parse_trajectory(cut, "t.csv")


@pytest.mark.parametrize(
    "mutate, match",
    [
        (lambda s: s.replace("t,x", "time,x"), "expected header"),
        (lambda s: "\n".join(s.splitlines()[:2]), "at least 2 rows"),
        (lambda s: s.replace("\n1,", "\n0,", 1), "increase strictly"),
        (lambda s: s.replace("\n1,0.5", "\n1,nan", 1), "non-finite"),
    ],
)
def test_trajectory_rejections(mutate, match):
    with pytest.raises(InputError, match=match):
        io.parse_trajectory(mutate(io.format_trajectory(_tt())))


def test_atomic_write(tmp_path):
    target = tmp_path / "out.txt"
    target.write_text("old")
    io.atomic_write(target, "new\n")
    assert target.read_text() == "new\n"
    assert [p.name for p in tmp_path.iterdir()] == ["out.txt"]
    mask = os.umask(0)
    os.umask(mask)
    assert stat.S_IMODE(target.stat().st_mode) == 0o666 & ~mask


def test_failed_write_leaves_target(tmp_path, monkeypatch):
    target = tmp_path / "out.txt"
    target.write_text("old")

    def boom(*a):
        raise OSError("disk full")

    monkeypatch.setattr(io.os, "replace", boom)
    with pytest.raises(OSError):
        io.atomic_write(target, "new")
    assert target.read_text() == "old"
    assert [p.name for p in tmp_path.iterdir()] == ["out.txt"]
