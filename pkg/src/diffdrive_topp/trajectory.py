"""Timed trajectory reconstruction, performance indexes and feasibility checks."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .discretize import EPS_DS, DiscretizedProblem, Limits, merge_coincident, segment_quantities
from .errors import StalledSegmentError
from .kinematics import omega_bounds_array
from .solver import V_SUM_MIN, Solution
from .spline import InitialTrajectory

FEAS_TOL = 1e-6


@dataclass
class TimedTrajectory:
    """Node and segment quantities of a timed path.

    Node arrays (length n): ``t``, ``x``, ``y``, ``theta``, ``v``.
    Segment arrays (length n-1): ``omega``, ``a``, ``v_r``, ``v_l``, ``dt``.
    ``ds`` and ``dtheta`` are the segment geometry the profile was built on;
    they are ``None`` for trajectories read back from a file.
    """

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    theta: np.ndarray
    v: np.ndarray
    omega: np.ndarray
    a: np.ndarray
    v_r: np.ndarray
    v_l: np.ndarray
    dt: np.ndarray
    ds: np.ndarray | None = None
    dtheta: np.ndarray | None = None

    @property
    def n(self):
        return len(self.t)

    @property
    def t_f(self):
        return float(self.t[-1])


@dataclass
class PerformanceReport:
    t_c: float
    t_f: float
    zeta: float
    rho: float
    chi: float
    t_fit: float = 0.0

    def feasible(self, tol=FEAS_TOL):
        return max(self.zeta, self.rho, self.chi) <= 1.0 + tol


@dataclass(frozen=True)
class Violation:
    index: int
    family: str
    row: str
    magnitude: float

    def __str__(self):
        return f"{self.family:<9} {self.row:<14} at {self.index:>6}: exceeds by {self.magnitude:.3e}"


def reconstruct(traj: InitialTrajectory, sol: Solution, lim: Limits, eps_ds=EPS_DS):
    """Turn an optimal speed profile into a timed trajectory.

    Uses the same coincident-sample merging as assembly, so ``sol.v`` must
    have one entry per merged node.

    Raises:
        ValueError: the solution is not optimal or has the wrong length.
        StalledSegmentError: some segment has ``v_k + v_{k+1}`` at or below
            the stall threshold.
    """
    if not sol.optimal:
        raise ValueError(f"cannot reconstruct a {sol.status} solution")
    traj = merge_coincident(traj, eps_ds)
    ds, dtheta = segment_quantities(traj, eps_ds)
    v = np.asarray(sol.v, dtype=float)
    if len(v) != len(traj):
        raise ValueError(f"solution has {len(v)} speeds for {len(traj)} path nodes")
    vsum = v[:-1] + v[1:]
    stalled = np.flatnonzero(vsum <= V_SUM_MIN)
    if len(stalled):
        k = int(stalled[0])
        raise StalledSegmentError(f"segment {k} has v_k + v_k+1 = {vsum[k]:.3g}; it is never traversed")

    dt = 2.0 * ds / vsum
    a = (v[1:] ** 2 - v[:-1] ** 2) / (2.0 * ds)
    omega = dtheta / (2.0 * ds) * vsum
    half = 0.5 * lim.geometry.track_width * omega
    t = np.concatenate([[0.0], np.cumsum(dt)])
    return TimedTrajectory(
        t=t,
        x=traj.x,
        y=traj.y,
        theta=np.concatenate([[traj.theta[0]], traj.theta[0] + np.cumsum(dtheta)]),
        v=v,
        omega=omega,
        a=a,
        v_r=v[:-1] + half,
        v_l=v[:-1] - half,
        dt=dt,
        ds=ds,
        dtheta=dtheta,
    )


def _ratio_upper(x, bound):
    with np.errstate(divide="ignore", invalid="ignore"):
        r = x / bound
    return np.where(bound > 0, r, np.where(x <= 0, 0.0, np.inf))


def indexes(tt: TimedTrajectory, lim: Limits, vcap, t_c=math.nan, t_fit=math.nan):
    """Normalised maxima of speed, acceleration and turn rate.

    ``zeta = max v_k / vcap_k``, ``rho = max(a/a_max, a/a_min)`` and
    ``chi = max(omega/Omega_max, omega/Omega_min)``, where the Omega bounds
    combine the turn-rate limits with the wheel limits at the segment's
    start speed.  Values above one mean a violated bound.
    """
    v = np.asarray(tt.v, dtype=float)
    zeta = float(np.max(v / np.asarray(vcap, dtype=float)))
    a = np.asarray(tt.a, dtype=float)
    rho = float(np.max(np.maximum(a / lim.a_max, a / lim.a_min), initial=0.0))
    lo, hi = omega_bounds_array(v[:-1], lim.joint, lim.geometry)
    om_max = np.minimum(hi, lim.omega_max)
    om_min = np.maximum(lo, lim.omega_min)
    w = np.asarray(tt.omega, dtype=float)
    chi_seg = np.maximum(_ratio_upper(w, om_max), _ratio_upper(-w, -om_min))
    chi = float(np.max(chi_seg, initial=0.0))
    return PerformanceReport(t_c=t_c, t_f=tt.t_f, zeta=max(zeta, 0.0), rho=max(rho, 0.0), chi=chi, t_fit=t_fit)


def feasibility_check(tt: TimedTrajectory, p: DiscretizedProblem, tol=FEAS_TOL):
    """Re-evaluate every constraint row of ``p`` at the speeds of ``tt``.

    The slack is taken as ``1 / (v_k + v_{k+1})``, i.e. the rows are checked
    in their physical meaning.  Returns the list of rows exceeding ``tol``.
    """
    v = np.asarray(tt.v, dtype=float)
    if len(v) != p.n:
        raise ValueError(f"trajectory has {len(v)} nodes, problem has {p.n}")
    out: list[Violation] = []

    def report(excess, family, row, offset=0):
        for k in np.flatnonzero(excess > tol):
            out.append(Violation(int(k) + offset, family, row, float(excess[k])))

    report(v - p.vcap, "velocity", "cap")
    report(-v, "velocity", "nonnegative")
    for k, val in sorted(p.pinned.items()):
        err = abs(v[k] - val)
        if err > tol:
            out.append(Violation(k, "boundary", "pinned", float(err)))

    va, vb = v[:-1], v[1:]
    s = va + vb
    report(-s, "cone", "positive sum")
    with np.errstate(divide="ignore", invalid="ignore"):
        c = 1.0 / s
    report(vb - va - p.abar * c, "accel", "upper")
    report(va - vb + p.aunder * c, "accel", "lower")

    ang = p.angular_active
    report(np.where(ang, s - p.wbar, 0.0), "angular", "upper")
    report(np.where(ang, p.wunder - s, 0.0), "angular", "lower")

    jl, g, act = p.joint, p.g, p.joint_active
    rows = [
        ("right", (1 + g) * va + g * vb, jl.v_r_min, jl.v_r_max),
        ("left", (1 - g) * va - g * vb, jl.v_l_min, jl.v_l_max),
    ]
    if p.strict_joint:
        rows += [
            ("right end", g * va + (1 + g) * vb, jl.v_r_min, jl.v_r_max),
            ("left end", -g * va + (1 - g) * vb, jl.v_l_min, jl.v_l_max),
        ]
    for name, expr, lo, hi in rows:
        report(np.where(act, expr - hi, 0.0), "joint", f"{name} upper")
        report(np.where(act, lo - expr, 0.0), "joint", f"{name} lower")

    out.sort(key=lambda r: (r.index, r.family, r.row))
    return out
