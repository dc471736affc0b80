"""Planner configuration loaded from JSON.

All keys are flat except the optional ``"solver"`` block.  The defaults are
the Lissajous experiment settings, so an empty config reproduces it.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .discretize import AssemblyOptions, BoundaryConditions, Limits
from .errors import InputError
from .kinematics import JointLimits, WheelGeometry
from .solver import BACKENDS, SolverSettings


@dataclass(frozen=True)
class Config:
    v_max: float = 0.6
    a_min: float = -1.0
    a_max: float = 1.0
    a_n_max: float = 0.6
    omega_min: float = -2.0
    omega_max: float = 2.0
    v_r_min: float = -0.75
    v_r_max: float = 0.75
    v_l_min: float = -0.75
    v_l_max: float = 0.75
    track_width: float = 0.35
    wheel_radius: float | None = None
    v_s: float = 0.0
    v_f: float = 0.0
    omega_s: float = 0.0
    omega_f: float = 0.0
    degree: int = 3
    resolution: float = 0.05
    u0: float | None = None
    disable_angular: bool = False
    disable_joint: bool = False
    strict_joint: bool = False
    eps_ds: float = 1e-6
    eps_dtheta: float = 1e-6
    solver: SolverSettings = field(default_factory=SolverSettings)

    def limits(self) -> Limits:
        return Limits(
            v_max=self.v_max,
            a_min=self.a_min,
            a_max=self.a_max,
            a_n_max=self.a_n_max,
            omega_min=self.omega_min,
            omega_max=self.omega_max,
            joint=JointLimits(self.v_r_min, self.v_r_max, self.v_l_min, self.v_l_max),
            geometry=WheelGeometry(self.track_width, self.wheel_radius),
        )

    def boundary(self) -> BoundaryConditions:
        return BoundaryConditions(self.v_s, self.v_f, self.omega_s, self.omega_f)

    def options(self) -> AssemblyOptions:
        return AssemblyOptions(
            disable_angular=self.disable_angular,
            disable_joint=self.disable_joint,
            strict_joint=self.strict_joint,
            eps_ds=self.eps_ds,
            eps_dtheta=self.eps_dtheta,
        )

    def to_dict(self):
        return asdict(self)

    def with_overrides(self, **kw):
        return replace(self, **kw)


_OPTIONAL = {"wheel_radius", "u0"}
_BOOL = {"disable_angular", "disable_joint", "strict_joint"}
_INT = {"degree"}
_SOLVER_KEYS = {"tol_feas": float, "tol_gap": float, "max_iter": int, "backend": str}


def _number(key, val, kind):
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise InputError(f"config key {key!r} must be a number, got {val!r}")
    if kind is int:
        if isinstance(val, float) and not val.is_integer():
            raise InputError(f"config key {key!r} must be an integer, got {val!r}")
        return int(val)
    if not math.isfinite(val):
        raise InputError(f"config key {key!r} must be finite")
    return float(val)


def config_from_dict(data: dict) -> Config:
    """Validate ``data`` against the schema and build a :class:`Config`.

    Raises:
        InputError: unknown keys, wrong types, or limits that fail validation.
    """
    if not isinstance(data, dict):
        raise InputError("config must be a JSON object")
    known = {f.name for f in fields(Config)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise InputError(f"unknown config keys: {', '.join(unknown)}")
    kw = {}
    for key, val in data.items():
        if key == "solver":
            kw[key] = _solver_from_dict(val)
        elif key in _BOOL:
            if not isinstance(val, bool):
                raise InputError(f"config key {key!r} must be true or false, got {val!r}")
            kw[key] = val
        elif key in _OPTIONAL and val is None:
            kw[key] = None
        else:
            kw[key] = _number(key, val, int if key in _INT else float)
    cfg = Config(**kw)
    try:
        cfg.limits()
    except ValueError as exc:
        raise InputError(f"invalid limits: {exc}") from None
    if cfg.degree < 1:
        raise InputError("degree must be >= 1")
    if not cfg.resolution > 0:
        raise InputError("resolution must be > 0")
    if cfg.u0 is not None and not cfg.u0 > 0:
        raise InputError("u0 must be > 0")
    if not (cfg.eps_ds > 0 and cfg.eps_dtheta > 0):
        raise InputError("eps_ds and eps_dtheta must be > 0")
    return cfg


def _solver_from_dict(block) -> SolverSettings:
    if not isinstance(block, dict):
        raise InputError("config key 'solver' must be an object")
    unknown = sorted(set(block) - set(_SOLVER_KEYS))
    if unknown:
        raise InputError(f"unknown solver keys: {', '.join(unknown)}")
    kw = {}
    for key, val in block.items():
        kind = _SOLVER_KEYS[key]
        if kind is str:
            if val not in BACKENDS:
                raise InputError(f"solver backend must be one of {sorted(BACKENDS)}, got {val!r}")
            kw[key] = val
        else:
            kw[key] = _number(f"solver.{key}", val, kind)
    try:
        return SolverSettings(**kw)
    except ValueError as exc:
        raise InputError(f"invalid solver settings: {exc}") from None


def load_config(path=None) -> Config:
    """Read a JSON config file; ``None`` gives the defaults."""
    if path is None:
        return Config()
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"config {path} is not valid JSON: {exc}") from None
    return config_from_dict(data)
