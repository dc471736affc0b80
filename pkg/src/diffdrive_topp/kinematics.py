"""Differential-drive kinematics.

Wheel speeds are expressed as *linear* rim speeds (m/s).  The wheel radius
is only needed when converting to or from wheel angular rates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from .errors import InfeasibleSpeedError


@dataclass(frozen=True)
class WheelGeometry:
    """Axle geometry.

    Attributes:
        track_width: distance between the two wheel contact points (m).
        wheel_radius: wheel radius (m); optional, used only for unit conversion.
    """

    track_width: float
    wheel_radius: float | None = None

    def __post_init__(self):
        if not (self.track_width > 0 and math.isfinite(self.track_width)):
            raise ValueError(f"track_width must be > 0, got {self.track_width}")
        if self.wheel_radius is not None and not self.wheel_radius > 0:
            raise ValueError(f"wheel_radius must be > 0, got {self.wheel_radius}")

    def rim_speed(self, wheel_rate):
        """Convert a wheel angular rate (rad/s) to a rim speed (m/s)."""
        if self.wheel_radius is None:
            raise ValueError("wheel_radius is not set")
        return wheel_rate * self.wheel_radius

    def wheel_rate(self, rim_speed):
        """Convert a rim speed (m/s) to a wheel angular rate (rad/s)."""
        if self.wheel_radius is None:
            raise ValueError("wheel_radius is not set")
        return rim_speed / self.wheel_radius


class BodyVelocity(NamedTuple):
    v: float
    omega: float


class WheelSpeeds(NamedTuple):
    v_r: float
    v_l: float


@dataclass(frozen=True)
class JointLimits:
    """Box limits on the right/left rim speeds (m/s). Rest must be admissible."""

    v_r_min: float
    v_r_max: float
    v_l_min: float
    v_l_max: float

    def __post_init__(self):
        if not self.v_r_min < self.v_r_max or not self.v_l_min < self.v_l_max:
            raise ValueError("joint limits need min < max for both wheels")
        if not (self.v_r_min <= 0 <= self.v_r_max and self.v_l_min <= 0 <= self.v_l_max):
            raise ValueError("joint limits must contain zero (rest must be feasible)")

    @classmethod
    def symmetric(cls, bound):
        return cls(-bound, bound, -bound, bound)

    def contains(self, w: WheelSpeeds, tol=0.0):
        return (
            self.v_r_min - tol <= w.v_r <= self.v_r_max + tol
            and self.v_l_min - tol <= w.v_l <= self.v_l_max + tol
        )

    @property
    def speed_range(self):
        """Linear speeds reachable with omega = 0."""
        return max(self.v_r_min, self.v_l_min), min(self.v_r_max, self.v_l_max)


def wheel_to_body(w: WheelSpeeds, g: WheelGeometry) -> BodyVelocity:
    return BodyVelocity(0.5 * (w.v_r + w.v_l), (w.v_r - w.v_l) / g.track_width)


def body_to_wheel(b: BodyVelocity, g: WheelGeometry) -> WheelSpeeds:
    half = 0.5 * b.omega * g.track_width
    return WheelSpeeds(b.v + half, b.v - half)


def omega_bounds_for_v(v_set, jl: JointLimits, g: WheelGeometry, tol=1e-12):
    """Interval of angular rates keeping both wheels inside their limits at ``v_set``.

    With ``v_r = v + omega*d/2`` and ``v_l = v - omega*d/2`` each wheel box
    gives one upper and one lower affine bound on omega.

    Raises:
        InfeasibleSpeedError: if no omega admits ``v_set``.
    """
    k = 2.0 / g.track_width
    hi = min(k * (jl.v_r_max - v_set), k * (v_set - jl.v_l_min))
    lo = max(k * (jl.v_r_min - v_set), k * (v_set - jl.v_l_max))
    if lo > hi + tol:
        raise InfeasibleSpeedError(f"no admissible angular rate at v={v_set!r}")
    if lo > hi:
        lo = hi = 0.5 * (lo + hi)
    return lo, hi


def v_bounds_for_omega(omega_set, jl: JointLimits, g: WheelGeometry, tol=1e-12):
    """Interval of linear speeds keeping both wheels inside their limits at ``omega_set``."""
    half = 0.5 * omega_set * g.track_width
    hi = min(jl.v_r_max - half, jl.v_l_max + half)
    lo = max(jl.v_r_min - half, jl.v_l_min + half)
    if lo > hi + tol:
        raise InfeasibleSpeedError(f"no admissible linear speed at omega={omega_set!r}")
    if lo > hi:
        lo = hi = 0.5 * (lo + hi)
    return lo, hi


def omega_bounds_array(v, jl: JointLimits, g: WheelGeometry):
    """Vectorised :func:`omega_bounds_for_v` without the feasibility check."""
    v = np.asarray(v, dtype=float)
    k = 2.0 / g.track_width
    hi = np.minimum(k * (jl.v_r_max - v), k * (v - jl.v_l_min))
    lo = np.maximum(k * (jl.v_r_min - v), k * (v - jl.v_l_max))
    return lo, hi


def integrate_pose(p0, controls: Iterable[tuple[float, float, float]]):
    """Integrate unicycle kinematics exactly over constant-(v, omega) pieces.

    Args:
        p0: initial pose ``(x, y, theta)``.
        controls: iterable of ``(v, omega, duration)``.

    Returns:
        List of poses, one after each piece.
    """
    x, y, th = (float(c) for c in p0)
    out = []
    for v, w, dt in controls:
        if not dt > 0:
            raise ValueError(f"durations must be > 0, got {dt}")
        dth = w * dt
        if abs(dth) < 1e-12:
            # second-order expansion of the arc for tiny turns
            x += v * dt * (math.cos(th) - 0.5 * dth * math.sin(th))
            y += v * dt * (math.sin(th) + 0.5 * dth * math.cos(th))
        else:
            r = v / w
            x += r * (math.sin(th + dth) - math.sin(th))
            y -= r * (math.cos(th + dth) - math.cos(th))
        th += dth
        out.append((x, y, th))
    return out
