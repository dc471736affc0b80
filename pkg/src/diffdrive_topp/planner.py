"""End-to-end pipeline: path input to timed trajectory."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass

from .config import Config
from .discretize import DiscretizedProblem, assemble, merge_coincident
from .solver import Solution, solve
from .spline import InitialTrajectory, WaypointPath, fit, sample_initial_trajectory
from .trajectory import PerformanceReport, TimedTrajectory, indexes, reconstruct

log = logging.getLogger(__name__)

# beyond this the slack objective no longer equals travel time
CONE_SLACK_WARN = 1e-6


@dataclass
class PlanResult:
    trajectory: InitialTrajectory
    problem: DiscretizedProblem
    solution: Solution
    timed: TimedTrajectory | None
    report: PerformanceReport | None
    t_fit: float
    t_c: float

    def summary(self):
        r = self.report
        nan = math.nan
        return {
            "status": self.solution.status,
            "n": self.problem.n,
            "t_c": self.t_c,
            "t_fit": self.t_fit,
            "t_f": r.t_f if r else nan,
            "zeta": r.zeta if r else nan,
            "rho": r.rho if r else nan,
            "chi": r.chi if r else nan,
        }


def initial_trajectory(path, cfg: Config) -> tuple[InitialTrajectory, float]:
    """Fit and sample waypoints, or pass samples through.  Returns (traj, fit time)."""
    if isinstance(path, InitialTrajectory):
        return path, 0.0
    if not isinstance(path, WaypointPath):
        raise TypeError(f"expected WaypointPath or InitialTrajectory, got {type(path).__name__}")
    t0 = time.perf_counter()
    curve = fit(path, cfg.degree, cfg.u0)
    traj = sample_initial_trajectory(curve, cfg.resolution)
    return traj, time.perf_counter() - t0


def build_problem(traj: InitialTrajectory, cfg: Config, **kw) -> DiscretizedProblem:
    return assemble(traj, cfg.limits(), cfg.boundary(), cfg.options(), **kw)


def plan(path, cfg: Config | None = None) -> PlanResult:
    """Run fit (if needed), assembly, solve and reconstruction.

    Raises whatever the stages raise for bad input; an infeasible or
    unfinished solve is reported through ``result.solution.status`` with
    ``timed`` and ``report`` left as None.
    """
    cfg = cfg or Config()
    traj, t_fit = initial_trajectory(path, cfg)
    t0 = time.perf_counter()
    p = build_problem(traj, cfg)
    sol = solve(p, cfg.solver)
    t_c = time.perf_counter() - t0
    merged = merge_coincident(traj, cfg.eps_ds)
    if not sol.optimal:
        return PlanResult(merged, p, sol, None, None, t_fit, t_c)
    slack = cone_slack(sol)
    if slack > CONE_SLACK_WARN:
        # an acceleration row held c above 1/(v_k + v_{k+1}); the timed
        # trajectory then exceeds the acceleration limit on that segment
        log.warning("cone slack %.3g at the optimum; check rho in the report", slack)
    lim = cfg.limits()
    tt = reconstruct(merged, sol, lim, cfg.eps_ds)
    report = indexes(tt, lim, p.vcap, t_c=t_c, t_fit=t_fit)
    return PlanResult(merged, p, sol, tt, report, t_fit, t_c)


def cone_slack(sol: Solution) -> float:
    """Largest ``c_k (v_k + v_{k+1}) - 1`` of a solved profile."""
    return float(((sol.v[:-1] + sol.v[1:]) * sol.c - 1.0).max(initial=0.0))
