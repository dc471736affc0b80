import numpy as np
import pytest

from diffdrive_topp.discretize import Limits
from diffdrive_topp.kinematics import JointLimits, WheelGeometry
from diffdrive_topp.spline import InitialTrajectory, WaypointPath


def lissajous_limits():
    return Limits(0.6, -1.0, 1.0, 0.6, -2.0, 2.0, JointLimits.symmetric(0.75), WheelGeometry(0.35))


def straight(n, length):
    x = np.linspace(0.0, length, n)
    z = np.zeros(n)
    return InitialTrajectory(x, z, z, z)


def arc_walk(rng, n, ds_range=(0.05, 0.3), turn_scale=1.0, straight_prob=0.4):
    """Random planar path built from short arcs; kappa is |turn rate per metre|."""
    ds = rng.uniform(*ds_range, n - 1)
    turn = rng.normal(0.0, turn_scale, n - 1) * (rng.random(n - 1) > straight_prob)
    dth = turn * ds
    th = np.concatenate([[0.0], np.cumsum(dth)])
    mid = th[:-1] + 0.5 * dth
    x = np.concatenate([[0.0], np.cumsum(ds * np.cos(mid))])
    y = np.concatenate([[0.0], np.cumsum(ds * np.sin(mid))])
    kap = np.abs(np.concatenate([[turn[0]], 0.5 * (turn[:-1] + turn[1:]), [turn[-1]]]))
    return InitialTrajectory(x, y, th, kap)


def random_limits(rng):
    wheel = rng.uniform(0.4, 0.9)
    return Limits(
        v_max=rng.uniform(0.4, 0.8),
        a_min=-rng.uniform(0.3, 1.2),
        a_max=rng.uniform(0.3, 1.2),
        a_n_max=rng.uniform(0.2, 0.8),
        omega_min=-rng.uniform(0.4, 1.5),
        omega_max=rng.uniform(0.4, 1.5),
        joint=JointLimits(-wheel, wheel, -wheel, wheel),
        geometry=WheelGeometry(rng.uniform(0.25, 0.5)),
    )


def wavy_waypoints(length=150.0, spacing=0.2, seed=0):
    """Smooth random waypoint path with roughly uniform spacing."""
    rng = np.random.default_rng(seed)
    s = np.arange(int(length / spacing) + 1) * spacing
    th = sum(
        rng.uniform(0.2, 0.8) * np.sin(2 * np.pi * s / rng.uniform(5, 30) + rng.uniform(0, 6))
        for _ in range(3)
    )
    x = np.concatenate([[0.0], np.cumsum(spacing * np.cos(th[:-1]))])
    y = np.concatenate([[0.0], np.cumsum(spacing * np.sin(th[:-1]))])
    return WaypointPath(np.column_stack([x, y]))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# criterion number -> one-line verdict, filled in by test_acceptance.py
ACCEPTANCE = {}


def record(number, ok, detail):
    """Store and print the verdict for one acceptance criterion, then assert it."""
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[number] = line
    print(line)
    assert ok, line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[number])
