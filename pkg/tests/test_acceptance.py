"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line that is repeated in the terminal summary.
"""

import functools
import json
import time

import numpy as np
import pytest
from conftest import arc_walk, random_limits, record, straight, wavy_waypoints

from diffdrive_topp import io
from diffdrive_topp.cli import main
from diffdrive_topp.config import Config
from diffdrive_topp.discretize import Limits, assemble
from diffdrive_topp.kinematics import JointLimits, WheelGeometry
from diffdrive_topp.lissajous import chord_speeds, lissajous_trajectory
from diffdrive_topp.planner import plan
from diffdrive_topp.solver import dp_oracle, solve
from diffdrive_topp.spline import fit, sample_initial_trajectory
from diffdrive_topp.trajectory import reconstruct

pytestmark = pytest.mark.acceptance


@functools.cache
def experiment_a():
    t0 = time.perf_counter()
    res = plan(lissajous_trajectory(0.01), Config())
    return res, time.perf_counter() - t0


@functools.cache
def experiment_a_ablated():
    return plan(lissajous_trajectory(0.01), Config(disable_angular=True, disable_joint=True))


def bang_bang_limits():
    return Limits(10.0, -1.0, 1.0, 0.6, -2.0, 2.0, JointLimits.symmetric(100.0), WheelGeometry(0.35))


@functools.cache
def random_instances():
    """Twenty small curvy instances whose problems carry every constraint family."""
    r = np.random.default_rng(2024)
    out = []
    while len(out) < 20:
        lim = random_limits(r)
        tr = arc_walk(r, int(r.integers(10, 31)), turn_scale=2.0, straight_prob=0.2)
        p = assemble(tr, lim)
        if p.angular_active.any() and p.joint_active.any():
            out.append((tr, lim, p))
    return out


@functools.cache
def long_path():
    curve = fit(wavy_waypoints(length=150.0, spacing=0.2, seed=1))
    return sample_initial_trajectory(curve, 0.03)


def test_criterion_01_initial_profile_speed():
    t0 = time.perf_counter()
    vmax = float(chord_speeds(lissajous_trajectory(0.01)).max())
    dt = time.perf_counter() - t0
    ok = abs(vmax - 1.894) <= 0.005 and dt < 1.0
    record(1, ok, f"max chord speed {vmax:.5f} m/s (target 1.894 +- 0.005), {dt:.3f} s")


def test_criterion_02_experiment_a_feasibility():
    res, dt = experiment_a()
    r = res.report
    idx = (r.zeta, r.rho, r.chi)
    ok = res.solution.optimal and all(0.99 <= x <= 1 + 1e-6 for x in idx) and dt < 30
    record(2, ok, f"zeta={r.zeta:.7f} rho={r.rho:.7f} chi={r.chi:.7f}, n={res.problem.n}, {dt:.2f} s")


def low_speed_regions(t, v, threshold, margin):
    """Maximal runs of samples with v < threshold, ignoring the first and last ``margin`` seconds."""
    inside = (t >= margin) & (t <= t[-1] - margin)
    low = (v < threshold) & inside
    starts = np.flatnonzero(low & ~np.r_[False, low[:-1]])
    ends = np.flatnonzero(low & ~np.r_[low[1:], False])
    return list(zip(starts, ends))


def test_criterion_03_six_low_speed_regions():
    res, _ = experiment_a()
    tt = res.timed
    regions = low_speed_regions(tt.t, tt.v, 0.5 * 0.6, 2.0)
    minima = [float(tt.v[a : b + 1].min()) for a, b in regions]
    record(3, len(regions) == 6, f"{len(regions)} regions below 0.3 m/s (target 6), minima {np.round(minima, 4).tolist()}")


def test_criterion_04_bang_bang():
    sol = solve(assemble(straight(3, 1.0), bang_bang_limits()))
    tf, v1 = sol.objective_value, sol.v[1]
    ok = sol.optimal and abs(tf - 2.0) <= 1e-4 and abs(v1 - 1.0) <= 1e-4
    record(4, ok, f"t_f={tf:.9f} v_1={v1:.9f}")


def test_criterion_05_oracle_sandwich():
    t0 = time.perf_counter()
    gaps = []
    for _, _, p in random_instances():
        sol = solve(p)
        t_dp, _ = dp_oracle(p, 400)
        gaps.append((t_dp - sol.objective_value) / sol.objective_value)
    dt = time.perf_counter() - t0
    ok = all(-1e-6 <= g <= 0.02 for g in gaps) and dt < 60
    record(5, ok, f"gap range [{min(gaps):.2e}, {max(gaps):.2e}] over {len(gaps)} instances, {dt:.1f} s")


def _identity_errors(tr, lim, p, sol):
    tt = reconstruct(tr, sol, lim)
    return (
        abs(float(2 * p.ds @ sol.c) - tt.t_f),
        float(np.abs(tt.omega * tt.dt - tt.dtheta).max()),
        float(np.abs(tt.v[:-1] + tt.a * tt.dt - tt.v[1:]).max()),
        float(np.abs(sol.c * (sol.v[:-1] + sol.v[1:]) - 1.0).max()),
    )


def test_criterion_06_reconstruction_identities():
    cases = [("bang-bang", straight(3, 1.0), bang_bang_limits())]
    cases += [(f"random {i}", tr, lim) for i, (tr, lim, _) in enumerate(random_instances())]
    cases += [("150 m path", long_path(), Config().limits())]
    res, _ = experiment_a()
    rows = [("lissajous", *_identity_errors(res.trajectory, Config().limits(), res.problem, res.solution))]
    for name, tr, lim in cases:
        p = assemble(tr, lim)
        rows.append((name, *_identity_errors(tr, lim, p, solve(p))))
    bounds = (1e-6, 1e-12, 1e-9, 1e-6)
    bad = [r[0] for r in rows if any(e > b for e, b in zip(r[1:], bounds))]
    worst = [max(r[i] for r in rows) for i in range(1, 5)]
    detail = (
        f"{len(rows) - len(bad)}/{len(rows)} instances hold; worst time {worst[0]:.1e}, "
        f"turn {worst[1]:.1e}, speed {worst[2]:.1e}, cone {worst[3]:.1e}"
    )
    if bad:
        detail += f"; failing: {', '.join(bad)}"
    record(6, not bad, detail)


def test_criterion_07_ablation(tmp_path, monkeypatch, capsys):
    full, _ = experiment_a()
    abl = experiment_a_ablated()
    monkeypatch.chdir(tmp_path)
    io.atomic_write("lis.csv", io.format_samples(lissajous_trajectory(0.01)))
    io.atomic_write("abl.trajectory.csv", io.format_trajectory(abl.timed))
    capsys.readouterr()
    code = main(["check", "abl.trajectory.csv", "lis.csv", "--max-report", "0"])
    report = json.loads(capsys.readouterr().out)
    ok = abl.report.t_f < full.report.t_f and report["chi"] > 1 and code == 2
    record(
        7,
        ok,
        f"t_f {full.report.t_f:.4f} -> {abl.report.t_f:.4f} s, check chi={report['chi']:.4f}, "
        f"violations {report['violations']}, exit {code}",
    )


def test_criterion_08_scale():
    tr = long_path()
    lim = Config().limits()
    t0 = time.perf_counter()
    p = assemble(tr, lim)
    sol = solve(p)
    dt = time.perf_counter() - t0
    ok = sol.optimal and 4500 <= p.n <= 5500 and dt <= 5.0
    record(8, ok, f"n={p.n}, assemble+solve {dt:.2f} s, status {sol.status}")


def test_criterion_09_monotonicity():
    r = np.random.default_rng(909)
    worst = np.inf
    count = 0
    for _ in range(10):
        lim = random_limits(r)
        tr = arc_walk(r, int(r.integers(10, 31)), turn_scale=2.0, straight_prob=0.2)
        base = solve(assemble(tr, lim)).objective_value
        for kw in ({"v": 0.5}, {"a": 0.5}, {"omega": 0.5}):
            tighter = solve(assemble(tr, lim.scaled(**kw))).objective_value
            worst = min(worst, (tighter - base) / base)
            count += 1
    record(9, worst >= -1e-8, f"{count} halvings, smallest relative change in t_f {worst:+.2e} (must be >= -1e-8)")


def test_criterion_10_spline_fidelity():
    w = wavy_waypoints(length=30.0, spacing=0.2, seed=10)
    c = fit(w)
    t = np.concatenate([[0.0], np.cumsum(w.chords)])
    resid = float(np.linalg.norm(c.evaluate(t) - w.points, axis=1).max())
    lo, hi = c.domain
    u = np.random.default_rng(10).uniform(lo + 1e-3, hi - 1e-3, 100)
    h = 1e-6
    fd = (c.evaluate(u + h) - c.evaluate(u - h)) / (2 * h)
    d = c.derivative(u, 1)
    rel = float((np.linalg.norm(fd - d, axis=1) / np.linalg.norm(d, axis=1)).max())
    record(10, resid <= 1e-6 and rel <= 1e-5, f"waypoint residual {resid:.1e} m, derivative error {rel:.1e} relative")
