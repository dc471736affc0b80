"""Analytic Lissajous test path.

``x = 10 (cos(pi/4) - cos(3 pi t / 50 + pi/4))`` and
``y = 2 (1 - cos(2 pi t / 50))`` for ``t`` in ``[0, 100]`` s.  Headings and
curvatures come from the closed-form derivatives, so no spline fit is
needed.
"""

from __future__ import annotations

import math

import numpy as np

from .spline import InitialTrajectory

PERIOD = 100.0
_W1 = 3.0 * math.pi / 50.0
_W2 = 2.0 * math.pi / 50.0
_PH = math.pi / 4.0


def position(t):
    t = np.asarray(t, dtype=float)
    x = 10.0 * (math.cos(_PH) - np.cos(_W1 * t + _PH))
    y = 2.0 * (1.0 - np.cos(_W2 * t))
    return x, y


def velocity(t):
    t = np.asarray(t, dtype=float)
    return 10.0 * _W1 * np.sin(_W1 * t + _PH), 2.0 * _W2 * np.sin(_W2 * t)


def acceleration(t):
    t = np.asarray(t, dtype=float)
    return 10.0 * _W1**2 * np.cos(_W1 * t + _PH), 2.0 * _W2**2 * np.cos(_W2 * t)


def curvature(t):
    dx, dy = velocity(t)
    ddx, ddy = acceleration(t)
    return (dx * ddy - dy * ddx) / np.hypot(dx, dy) ** 3


def sample_times(resolution, t_end=PERIOD):
    """Uniform times ``0, r, 2r, ...`` with the last one at ``t_end``."""
    if not resolution > 0:
        raise ValueError(f"resolution must be > 0, got {resolution}")
    m = int(math.floor(t_end / resolution + 1e-9))
    t = np.arange(m + 1) * resolution
    if t_end - t[-1] > 1e-9 * max(1.0, t_end):
        t = np.append(t, t_end)
    else:
        t[-1] = t_end
    return t


def lissajous_trajectory(resolution=0.01, t_end=PERIOD):
    """Sample the curve into an :class:`InitialTrajectory`.

    The time grid is kept in ``param``; ``resolution`` records the step.
    """
    t = sample_times(resolution, t_end)
    x, y = position(t)
    dx, dy = velocity(t)
    return InitialTrajectory(
        x, y, np.arctan2(dy, dx), np.abs(curvature(t)), resolution=float(resolution), param=t
    )


def chord_speeds(traj: InitialTrajectory):
    """Chord length over sample spacing for a time-sampled trajectory."""
    t = np.asarray(traj.param, dtype=float)
    return np.hypot(np.diff(traj.x), np.diff(traj.y)) / np.diff(t)
