"""Time-optimal speed planning for differential-drive robots along a fixed path."""

from .config import Config, load_config
from .discretize import AssemblyOptions, BoundaryConditions, DiscretizedProblem, Limits, assemble
from .kinematics import JointLimits, WheelGeometry
from .planner import PlanResult, plan
from .solver import Solution, SolverSettings, dp_oracle, solve
from .spline import BSplineCurve, InitialTrajectory, WaypointPath, fit, sample_initial_trajectory
from .trajectory import PerformanceReport, TimedTrajectory, feasibility_check, indexes, reconstruct

__all__ = [
    "AssemblyOptions",
    "BSplineCurve",
    "BoundaryConditions",
    "Config",
    "DiscretizedProblem",
    "InitialTrajectory",
    "JointLimits",
    "Limits",
    "PerformanceReport",
    "PlanResult",
    "Solution",
    "SolverSettings",
    "TimedTrajectory",
    "WaypointPath",
    "WheelGeometry",
    "assemble",
    "dp_oracle",
    "feasibility_check",
    "fit",
    "indexes",
    "load_config",
    "plan",
    "reconstruct",
    "sample_initial_trajectory",
    "solve",
]
