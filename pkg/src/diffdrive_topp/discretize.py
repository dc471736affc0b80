"""Discrete conic-program data for a sampled path.

For n path samples the decision variables are the node speeds ``v_k`` and
one slack ``c_k >= 1 / (v_k + v_{k+1})`` per segment, so that the traversal
time ``sum 2 ds_k c_k`` is linear.  This module turns the geometry and the
limits into the per-node and per-segment coefficients of that program.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BoundaryInfeasibleError, DegeneratePathError
from .kinematics import JointLimits, WheelGeometry
from .spline import InitialTrajectory, wrap_angle

EPS_DS = 1e-6
EPS_DTHETA = 1e-6


@dataclass(frozen=True)
class Limits:
    v_max: float
    a_min: float
    a_max: float
    a_n_max: float
    omega_min: float
    omega_max: float
    joint: JointLimits
    geometry: WheelGeometry

    def __post_init__(self):
        if not self.v_max > 0:
            raise ValueError("v_max must be > 0")
        if not self.a_min < 0 < self.a_max:
            raise ValueError("need a_min < 0 < a_max")
        if not self.a_n_max > 0:
            raise ValueError("a_n_max must be > 0")
        if not self.omega_min < 0 < self.omega_max:
            raise ValueError("need omega_min < 0 < omega_max")

    def scaled(self, v=1.0, a=1.0, omega=1.0):
        """Copy with speed, acceleration and/or angular-rate bounds scaled."""
        return Limits(
            self.v_max * v,
            self.a_min * a,
            self.a_max * a,
            self.a_n_max,
            self.omega_min * omega,
            self.omega_max * omega,
            self.joint,
            self.geometry,
        )


@dataclass(frozen=True)
class BoundaryConditions:
    v_s: float = 0.0
    v_f: float = 0.0
    omega_s: float = 0.0
    omega_f: float = 0.0


@dataclass(frozen=True)
class AssemblyOptions:
    disable_angular: bool = False
    disable_joint: bool = False
    strict_joint: bool = False
    eps_ds: float = EPS_DS
    eps_dtheta: float = EPS_DTHETA


@dataclass
class DiscretizedProblem:
    """Coefficients of the speed-profile program.

    Per segment k in [0, n-2]: ``ds``, ``dtheta``, acceleration bounds on
    ``v_{k+1}^2 - v_k^2`` (``abar``, ``aunder``), the angular-rate bounds
    on ``v_k + v_{k+1}`` (``wbar``, ``wunder``, from ``h = 2 ds / dtheta``),
    the wheel coupling ``g`` and the two activity flags.  Per node:
    the speed cap ``vcap``.  ``pinned`` maps node index to a fixed speed.
    """

    ds: np.ndarray
    dtheta: np.ndarray
    vcap: np.ndarray
    abar: np.ndarray
    aunder: np.ndarray
    h: np.ndarray
    wbar: np.ndarray
    wunder: np.ndarray
    g: np.ndarray
    angular_active: np.ndarray
    joint_active: np.ndarray
    boundary: BoundaryConditions
    joint: JointLimits
    strict_joint: bool = False
    pinned: dict = field(default_factory=dict)

    @property
    def n(self):
        return len(self.vcap)

    @property
    def n_segments(self):
        return len(self.ds)

    # -- dumps -------------------------------------------------------------

    def to_dict(self):
        def arr(a):
            return [None if not math.isfinite(x) else float(x) for x in np.asarray(a, float)]

        return {
            "n": self.n,
            "ds": arr(self.ds),
            "dtheta": arr(self.dtheta),
            "vcap": arr(self.vcap),
            "abar": arr(self.abar),
            "aunder": arr(self.aunder),
            "h": arr(self.h),
            "wbar": arr(self.wbar),
            "wunder": arr(self.wunder),
            "g": arr(self.g),
            "flags": {
                "angular_active": [bool(b) for b in self.angular_active],
                "joint_active": [bool(b) for b in self.joint_active],
                "strict_joint": bool(self.strict_joint),
            },
            "boundary": {
                "v_s": self.boundary.v_s,
                "v_f": self.boundary.v_f,
                "omega_s": self.boundary.omega_s,
                "omega_f": self.boundary.omega_f,
                "pinned": {str(k): float(v) for k, v in sorted(self.pinned.items())},
            },
            "joint": {
                "v_r_min": self.joint.v_r_min,
                "v_r_max": self.joint.v_r_max,
                "v_l_min": self.joint.v_l_min,
                "v_l_max": self.joint.v_l_max,
            },
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d):
        def arr(key, fill):
            return np.array([fill if x is None else x for x in d[key]], dtype=float)

        b = d["boundary"]
        flags = d["flags"]
        return cls(
            ds=arr("ds", np.nan),
            dtheta=arr("dtheta", np.nan),
            vcap=arr("vcap", np.nan),
            abar=arr("abar", np.nan),
            aunder=arr("aunder", np.nan),
            h=arr("h", np.inf),
            wbar=arr("wbar", np.inf),
            wunder=arr("wunder", -np.inf),
            g=arr("g", np.nan),
            angular_active=np.array(flags["angular_active"], dtype=bool),
            joint_active=np.array(flags["joint_active"], dtype=bool),
            boundary=BoundaryConditions(b["v_s"], b["v_f"], b["omega_s"], b["omega_f"]),
            joint=JointLimits(**d["joint"]),
            strict_joint=bool(flags.get("strict_joint", False)),
            pinned={int(k): float(v) for k, v in b.get("pinned", {}).items()},
        )

    def describe(self):
        """Human-readable constraint listing, one line per constraint."""
        lines = ["minimize " + " + ".join(f"{2 * s:.9g}*c{k}" for k, s in enumerate(self.ds))]
        for k in range(self.n):
            lines.append(f"velocity[{k}]: 0 <= v{k} <= {self.vcap[k]:.9g}")
        jl = self.joint
        for k in range(self.n_segments):
            j = k + 1
            lines.append(f"accel_upper[{k}]: v{j} - v{k} <= {self.abar[k]:.9g}*c{k}")
            lines.append(f"accel_lower[{k}]: v{k} - v{j} <= {-self.aunder[k]:.9g}*c{k}")
            if self.angular_active[k]:
                lines.append(
                    f"angular[{k}]: {self.wunder[k]:.9g} <= v{k} + v{j} <= {self.wbar[k]:.9g}"
                )
            if self.joint_active[k]:
                g = self.g[k]
                lines.append(
                    f"joint_right[{k}]: {jl.v_r_min:.9g} <= {1 + g:.9g}*v{k} + {g:.9g}*v{j}"
                    f" <= {jl.v_r_max:.9g}"
                )
                lines.append(
                    f"joint_left[{k}]: {jl.v_l_min:.9g} <= {1 - g:.9g}*v{k} - {g:.9g}*v{j}"
                    f" <= {jl.v_l_max:.9g}"
                )
                if self.strict_joint:
                    lines.append(
                        f"joint_right_end[{k}]: {jl.v_r_min:.9g} <= {g:.9g}*v{k} + "
                        f"{1 + g:.9g}*v{j} <= {jl.v_r_max:.9g}"
                    )
                    lines.append(
                        f"joint_left_end[{k}]: {jl.v_l_min:.9g} <= {-g:.9g}*v{k} + "
                        f"{1 - g:.9g}*v{j} <= {jl.v_l_max:.9g}"
                    )
            lines.append(f"cone[{k}]: c{k} * (v{k} + v{j}) >= 1")
        for i, val in sorted(self.pinned.items()):
            lines.append(f"boundary: v{i} = {val:.9g}")
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# coefficient builders


def merge_coincident(traj: InitialTrajectory, eps_ds=EPS_DS):
    """Drop samples closer than ``eps_ds`` to the previously kept one.

    The final sample is always kept (its predecessor is dropped instead).
    """
    pts = traj.points
    keep = [0]
    for i in range(1, len(pts)):
        if np.linalg.norm(pts[i] - pts[keep[-1]]) > eps_ds:
            keep.append(i)
        elif i == len(pts) - 1 and len(keep) > 1:
            keep[-1] = i
    if len(keep) == len(pts):
        return traj
    idx = np.array(keep)
    param = None if traj.param is None else traj.param[idx]
    return InitialTrajectory(
        traj.x[idx], traj.y[idx], traj.theta[idx], traj.kappa[idx], traj.resolution, param
    )


def segment_quantities(traj: InitialTrajectory, eps_ds=EPS_DS):
    """Chord lengths and wrapped heading increments between consecutive samples."""
    ds = np.hypot(np.diff(traj.x), np.diff(traj.y))
    bad = np.flatnonzero(ds < eps_ds)
    if bad.size:
        raise DegeneratePathError(
            f"samples {bad[0]} and {bad[0] + 1} are {ds[bad[0]]:.3g} m apart (< {eps_ds})"
        )
    dtheta = wrap_angle(np.diff(traj.theta))
    return ds, np.atleast_1d(dtheta)


def velocity_caps(kappa, lim: Limits):
    kappa = np.asarray(kappa, dtype=float)
    with np.errstate(divide="ignore"):
        curv = np.where(kappa > 0, np.sqrt(lim.a_n_max / np.where(kappa > 0, kappa, 1.0)), np.inf)
    return np.minimum(lim.v_max, curv)


def accel_coeffs(ds, lim: Limits):
    ds = np.asarray(ds, dtype=float)
    return 2.0 * ds * lim.a_max, 2.0 * ds * lim.a_min


def omega_coeffs(ds, dtheta, lim: Limits, eps_dtheta=EPS_DTHETA):
    """Bounds on ``v_k + v_{k+1}`` implied by the angular-rate limits.

    Segments with ``|dtheta| < eps_dtheta`` are inactive and get
    ``h = inf`` and unbounded limits.
    """
    ds = np.asarray(ds, dtype=float)
    dtheta = np.asarray(dtheta, dtype=float)
    active = np.abs(dtheta) >= eps_dtheta
    safe = np.where(active, dtheta, 1.0)
    h = np.where(active, 2.0 * ds / safe, np.inf)
    a, b = h * lim.omega_max, h * lim.omega_min
    wunder = np.where(active, np.minimum(a, b), -np.inf)
    wbar = np.where(active, np.maximum(a, b), np.inf)
    return h, wbar, wunder, active


def joint_coeffs(ds, dtheta, geometry: WheelGeometry):
    return geometry.track_width * np.asarray(dtheta, float) / (4.0 * np.asarray(ds, float))


# ---------------------------------------------------------------------------


def _pin_omega(which, k, ds, dtheta, active, omega, v_end, pins):
    """Pin the neighbour of a boundary node so the end segment turns at ``omega``."""
    if not active:
        return
    if omega == 0.0:
        # zero turn rate cannot hold over a curved piece with piecewise-constant
        # omega and positive mean speed; the rest-state condition is left to v
        return
    other_speed = 2.0 * ds * omega / dtheta - v_end
    if other_speed < 0.0:
        raise BoundaryInfeasibleError(
            f"{which} angular rate {omega} is incompatible with the heading change "
            f"{dtheta:.3g} rad of the end segment",
            family="boundary",
        )
    pins.append((k, other_speed))


def assemble(
    traj: InitialTrajectory,
    lim: Limits,
    bc: BoundaryConditions | None = None,
    options: AssemblyOptions | None = None,
    check_boundary: bool = True,
) -> DiscretizedProblem:
    """Build the program coefficients for ``traj``.

    Raises:
        BoundaryInfeasibleError: boundary speeds outside ``[0, vcap]`` at the
            end nodes, or a boundary turn rate the end segment cannot realise.
        DegeneratePathError: coincident samples survive merging.
    """
    bc = bc or BoundaryConditions()
    opt = options or AssemblyOptions()
    traj = merge_coincident(traj, opt.eps_ds)
    ds, dtheta = segment_quantities(traj, opt.eps_ds)
    vcap = velocity_caps(traj.kappa, lim)
    abar, aunder = accel_coeffs(ds, lim)
    h, wbar, wunder, geo_turning = omega_coeffs(ds, dtheta, lim, opt.eps_dtheta)
    angular_active = geo_turning & (not opt.disable_angular)
    g = joint_coeffs(ds, dtheta, lim.geometry)
    joint_active = np.full(len(ds), not opt.disable_joint)
    n = len(vcap)

    tol = 1e-12
    pins = [(0, bc.v_s), (n - 1, bc.v_f)]
    if check_boundary:
        for name, k, val in (("start", 0, bc.v_s), ("final", n - 1, bc.v_f)):
            if not -tol <= val <= vcap[k] + tol:
                raise BoundaryInfeasibleError(
                    f"{name} speed {val} m/s is outside [0, {vcap[k]:.6g}] (the velocity cap "
                    f"at node {k}); boundary speeds must lie within [0, cap]",
                    family="velocity",
                )
        for name, omega in (("start", bc.omega_s), ("final", bc.omega_f)):
            if not lim.omega_min <= omega <= lim.omega_max:
                raise BoundaryInfeasibleError(
                    f"{name} angular rate {omega} rad/s is outside "
                    f"[{lim.omega_min}, {lim.omega_max}]",
                    family="angular",
                )
    for name, seg, omega in (("start", 0, bc.omega_s), ("final", n - 2, bc.omega_f)):
        if not geo_turning[seg] and omega != 0.0:
            raise BoundaryInfeasibleError(
                f"{name} angular rate {omega} rad/s requested on a straight end segment",
                family="boundary",
            )
    _pin_omega("start", 1, ds[0], dtheta[0], angular_active[0], bc.omega_s, bc.v_s, pins)
    _pin_omega("final", n - 2, ds[-1], dtheta[-1], angular_active[-1], bc.omega_f, bc.v_f, pins)

    pinned = {}
    for k, val in pins:
        if k in pinned and abs(pinned[k] - val) > 1e-9:
            raise BoundaryInfeasibleError(
                f"boundary conditions pin node {k} to both {pinned[k]:.6g} and {val:.6g}"
            )
        if check_boundary and not -tol <= val <= vcap[k] + tol:
            raise BoundaryInfeasibleError(
                f"boundary conditions need v{k} = {val:.6g}, outside [0, {vcap[k]:.6g}]",
                family="velocity",
            )
        pinned[k] = float(val)

    return DiscretizedProblem(
        ds=ds,
        dtheta=dtheta,
        vcap=vcap,
        abar=abar,
        aunder=aunder,
        h=h,
        wbar=wbar,
        wunder=wunder,
        g=g,
        angular_active=angular_active,
        joint_active=joint_active,
        boundary=bc,
        joint=lim.joint,
        strict_joint=opt.strict_joint,
        pinned=pinned,
    )
