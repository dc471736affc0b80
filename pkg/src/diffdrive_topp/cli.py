"""Command-line front end.

Exit codes: 0 success, 1 bad input or configuration, 2 infeasible problem
(or, for ``check``, constraint violations), 3 solver iteration limit.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import io, svg
from .config import load_config
from .errors import (
    BoundaryInfeasibleError,
    GuardError,
    InputError,
    NoFeasiblePathError,
    PlannerError,
    StalledSegmentError,
)
from .lissajous import lissajous_trajectory
from .planner import build_problem, initial_trajectory, plan
from .solver import MAX_ITER, dp_oracle, solve
from .spline import WaypointPath, fit, sample_initial_trajectory
from .trajectory import feasibility_check, indexes

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_MAX_ITER = 0, 1, 2, 3

log = logging.getLogger("diffdrive_topp")


class StageError(Exception):
    def __init__(self, stage, exc, code):
        super().__init__(f"{stage}: {exc}")
        self.code = code


def _stage(stage, fn, *args, **kw):
    """Run one pipeline stage, mapping library errors to exit codes."""
    try:
        return fn(*args, **kw)
    except (BoundaryInfeasibleError, StalledSegmentError, NoFeasiblePathError) as exc:
        raise StageError(stage, exc, EXIT_INFEASIBLE) from exc
    except (PlannerError, ValueError) as exc:
        raise StageError(stage, exc, EXIT_INPUT) from exc


def _out(args, suffix):
    return None if args.out is None else f"{args.out}{suffix}"


def cmd_lissajous(args, cfg):
    if not args.resolution > 0:
        raise StageError("lissajous", "resolution must be > 0", EXIT_INPUT)
    traj = lissajous_trajectory(args.resolution)
    io.emit(io.format_samples(traj), _out(args, ".csv"))
    return EXIT_OK


def cmd_fit(args, cfg):
    path = _stage("read", io.read_path, args.waypoints)
    if not isinstance(path, WaypointPath):
        raise StageError("read", "fit expects a 2-column waypoint file", EXIT_INPUT)
    curve = _stage("fit", fit, path, cfg.degree, cfg.u0)
    traj = _stage("sample", sample_initial_trajectory, curve, cfg.resolution)
    io.emit(io.format_samples(traj), _out(args, ".csv"))
    return EXIT_OK


def cmd_plan(args, cfg):
    path = _stage("read", io.read_path, args.path)
    res = _stage("plan", plan, path, cfg)
    sol = res.solution
    summary = res.summary()
    if args.no_timings:
        summary["t_c"] = summary["t_fit"] = None
    prefix = args.out or "plan"
    if not sol.optimal:
        detail = f" ({sol.infeasible_family} constraints)" if sol.infeasible_family else ""
        print(f"error: solve: {sol.status}{detail}: {sol.message}", file=sys.stderr)
        io.atomic_write(f"{prefix}.summary.json", io.dumps_json(summary))
        return EXIT_MAX_ITER if sol.status == MAX_ITER else EXIT_INFEASIBLE
    io.atomic_write(f"{prefix}.trajectory.csv", io.format_trajectory(res.timed))
    io.atomic_write(f"{prefix}.summary.json", io.dumps_json(summary))
    if args.svg:
        try:
            io.atomic_write(f"{prefix}.svg", svg.render(res.timed, res.problem.vcap))
        except Exception as exc:  # plotting must never change the outcome
            log.warning("svg not written: %s", exc)
    sys.stdout.write(io.dumps_json(summary))
    return EXIT_OK


def cmd_check(args, cfg):
    tt = _stage("read", io.read_trajectory, args.trajectory)
    path = _stage("read", io.read_path, args.path)
    traj, _ = _stage("fit", initial_trajectory, path, cfg)
    p = _stage("assemble", build_problem, traj, cfg, check_boundary=False)
    if p.n != tt.n:
        raise StageError(
            "check", f"trajectory has {tt.n} rows but the path gives {p.n} nodes", EXIT_INPUT
        )
    violations = feasibility_check(tt, p)
    report = indexes(tt, cfg.limits(), p.vcap)
    counts = {}
    for v in violations:
        counts[v.family] = counts.get(v.family, 0) + 1
    result = {
        "feasible": not violations,
        "violations": counts,
        "t_f": report.t_f,
        "zeta": report.zeta,
        "rho": report.rho,
        "chi": report.chi,
    }
    for v in violations[: args.max_report]:
        print(v, file=sys.stderr)
    if len(violations) > args.max_report:
        print(f"... {len(violations) - args.max_report} more", file=sys.stderr)
    io.emit(io.dumps_json(result), _out(args, ".check.json"))
    return EXIT_OK if not violations else EXIT_INFEASIBLE


def cmd_oracle(args, cfg):
    path = _stage("read", io.read_path, args.path)
    traj, _ = _stage("fit", initial_trajectory, path, cfg)
    p = _stage("assemble", build_problem, traj, cfg)
    sol = solve(p, cfg.solver)
    if not sol.optimal:
        print(f"error: solve: {sol.status}: {sol.message}", file=sys.stderr)
        return EXIT_MAX_ITER if sol.status == MAX_ITER else EXIT_INFEASIBLE
    try:
        t_dp, _ = dp_oracle(p, args.grid)
    except GuardError as exc:
        raise StageError("oracle", exc, EXIT_INPUT) from exc
    except NoFeasiblePathError as exc:
        raise StageError("oracle", exc, EXIT_INFEASIBLE) from exc
    t_socp = sol.objective_value
    result = {
        "n": p.n,
        "M": args.grid,
        "t_f_socp": t_socp,
        "t_f_dp": t_dp,
        "gap": (t_dp - t_socp) / t_socp,
    }
    io.emit(io.dumps_json(result), _out(args, ".oracle.json"))
    return EXIT_OK


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="JSON config file")
    common.add_argument("--out", default=argparse.SUPPRESS, help="output prefix")
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    ap = argparse.ArgumentParser(
        prog="diffdrive-topp",
        description="Time-optimal speed planning for differential-drive robots.",
        parents=[common],
    )
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("lissajous", parents=[common], help="write the analytic Lissajous test path")
    s.add_argument("--resolution", type=float, default=0.01, help="time step in seconds")
    s.set_defaults(func=cmd_lissajous)

    s = sub.add_parser("fit", parents=[common], help="fit and sample a waypoint CSV")
    s.add_argument("waypoints", help="x,y CSV ('-' for stdin)")
    s.set_defaults(func=cmd_fit)

    s = sub.add_parser("plan", parents=[common], help="plan a time-optimal speed profile")
    s.add_argument("path", help="waypoint or sample CSV ('-' for stdin)")
    s.add_argument("--svg", action="store_true", help="also write PREFIX.svg")
    s.add_argument("--no-timings", action="store_true", help="write null timings for reproducible summaries")
    s.set_defaults(func=cmd_plan)

    s = sub.add_parser("check", parents=[common], help="check a trajectory CSV against the limits")
    s.add_argument("trajectory", help="trajectory CSV written by plan")
    s.add_argument("path", help="the path CSV the trajectory was planned on")
    s.add_argument("--max-report", type=int, default=20, help="violations to list")
    s.set_defaults(func=cmd_check)

    s = sub.add_parser("oracle", parents=[common], help="compare the solver with the grid oracle")
    s.add_argument("path", help="waypoint or sample CSV")
    s.add_argument("--grid", type=int, default=400, help="speed levels per node (M)")
    s.set_defaults(func=cmd_oracle)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    for name, default in (("config", None), ("out", None), ("verbose", False)):
        if not hasattr(args, name):
            setattr(args, name, default)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = load_config(args.config)
        return args.func(args, cfg)
    except InputError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
