"""Speed-profile solver.

The discretised problem is mapped onto a cone program with variables
ordered ``v_0, c_0, v_1, c_1, ..., c_{n-2}, v_{n-1}`` (pinned speeds
eliminated), which keeps every constraint inside a width-3 stencil.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from ..discretize import DiscretizedProblem
from ..errors import InputError
from .ipm import INFEASIBLE, MAX_ITER, OPTIMAL, IPMSettings, StencilProgram, solve_ipm
from .oracle import dp_oracle

__all__ = [
    "SolverSettings",
    "Solution",
    "ConicProgram",
    "build_program",
    "solve",
    "dp_oracle",
    "BACKENDS",
]

_R2 = math.sqrt(2.0)
V_SUM_MIN = 1e-6


@dataclass(frozen=True)
class SolverSettings:
    tol_feas: float = 1e-8
    tol_gap: float = 1e-8
    max_iter: int = 200
    backend: str = "ipm"

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise ValueError(f"unknown backend {self.backend!r}; choose from {sorted(BACKENDS)}")
        if not (self.tol_feas > 0 and self.tol_gap > 0 and self.max_iter > 0):
            raise ValueError("tolerances and max_iter must be positive")


@dataclass
class Solution:
    status: str
    v: np.ndarray
    c: np.ndarray
    objective_value: float
    iterations: int
    solve_time: float
    message: str = ""
    infeasible_family: str | None = None
    primal_residual: float = float("nan")

    @property
    def optimal(self):
        return self.status == OPTIMAL


@dataclass
class ConicProgram:
    """Stencil program plus the bookkeeping to map it back to (v, c)."""

    program: StencilProgram
    var_of_v: np.ndarray  # reduced column per node, -1 if pinned
    var_of_c: np.ndarray
    pinned: dict
    lp_family: np.ndarray
    lp_index: np.ndarray
    presolve_family: str | None = None
    presolve_message: str = ""
    families: tuple = field(default=())


def _rows(p: DiscretizedProblem):
    """All linear rows ``a' [v_k, c_k, v_{k+1}] <= rhs`` in full-variable indexing."""
    n, m = p.n, p.n_segments
    kv = np.arange(m)
    vk, ck, vk1 = 2 * kv, 2 * kv + 1, 2 * kv + 2
    seg_cols = np.column_stack([vk, ck, vk1])
    jl = p.joint
    g = p.g
    zero = np.zeros(m)
    one = np.ones(m)
    out = []

    nodes = np.arange(n)
    node_cols = np.column_stack([2 * nodes, np.full(n, -1), np.full(n, -1)])
    out.append(("velocity", nodes, node_cols, np.column_stack([-np.ones(n), np.zeros(n), np.zeros(n)]), np.zeros(n)))
    out.append(("velocity", nodes, node_cols, np.column_stack([np.ones(n), np.zeros(n), np.zeros(n)]), p.vcap.copy()))

    out.append(("accel_upper", kv, seg_cols, np.column_stack([-one, -p.abar, one]), zero))
    out.append(("accel_lower", kv, seg_cols, np.column_stack([one, p.aunder, -one]), zero))

    act = np.flatnonzero(p.angular_active)
    if act.size:
        cols = seg_cols[act]
        o = np.ones(act.size)
        z = np.zeros(act.size)
        out.append(("angular", act, cols, np.column_stack([o, z, o]), p.wbar[act]))
        out.append(("angular", act, cols, np.column_stack([-o, z, -o]), -p.wunder[act]))

    jact = np.flatnonzero(p.joint_active)
    if jact.size:
        cols = seg_cols[jact]
        gj = g[jact]
        z = np.zeros(jact.size)
        right = np.column_stack([1 + gj, z, gj])
        left = np.column_stack([1 - gj, z, -gj])
        pairs = [("joint_right", right, jl.v_r_min, jl.v_r_max), ("joint_left", left, jl.v_l_min, jl.v_l_max)]
        if p.strict_joint:
            pairs += [
                ("joint_right", np.column_stack([gj, z, 1 + gj]), jl.v_r_min, jl.v_r_max),
                ("joint_left", np.column_stack([-gj, z, 1 - gj]), jl.v_l_min, jl.v_l_max),
            ]
        for fam, a, lo, hi in pairs:
            out.append((fam, jact, cols, a, np.full(jact.size, hi)))
            out.append((fam, jact, cols, -a, np.full(jact.size, -lo)))

    fam = np.concatenate([np.full(len(r[1]), r[0], dtype=object) for r in out])
    idx = np.concatenate([r[1] for r in out])
    cols = np.concatenate([r[2] for r in out]).astype(np.int64)
    vals = np.concatenate([r[3] for r in out]).astype(float)
    rhs = np.concatenate([r[4] for r in out]).astype(float)
    return fam, idx, cols, vals, rhs


def build_program(p: DiscretizedProblem, tol=1e-9) -> ConicProgram:
    """Map a discretised problem onto the stencil cone program."""
    n, m = p.n, p.n_segments
    n_full = 2 * n - 1
    pinned_full = np.zeros(n_full, dtype=bool)
    pin_val = np.zeros(n_full)
    for k, val in p.pinned.items():
        pinned_full[2 * k] = True
        pin_val[2 * k] = val
    reduced = np.cumsum(~pinned_full) - 1
    reduced[pinned_full] = -1
    n_var = int((~pinned_full).sum())

    fam, idx, cols, vals, rhs = _rows(p)

    # node bounds of pinned speeds are checked in presolve, not kept as rows
    keep = ~((fam == "velocity") & pinned_full[np.maximum(cols[:, 0], 0)])
    presolve_family, presolve_message = None, ""
    for k, val in sorted(p.pinned.items()):
        if not -tol <= val <= p.vcap[k] + tol:
            presolve_family = "velocity"
            presolve_message = f"pinned speed v{k}={val:.6g} outside [0, {p.vcap[k]:.6g}]"
            break
    fam, idx, cols, vals, rhs = fam[keep], idx[keep], cols[keep], vals[keep], rhs[keep]

    is_pinned = (cols >= 0) & pinned_full[np.maximum(cols, 0)]
    rhs = rhs - np.where(is_pinned, vals * pin_val[np.maximum(cols, 0)], 0.0).sum(axis=1)
    vals = np.where(is_pinned | (cols < 0), 0.0, vals)
    cols = np.where(is_pinned | (cols < 0), -1, reduced[np.maximum(cols, 0)])

    empty = np.all(cols < 0, axis=1)
    if presolve_family is None and np.any(empty & (rhs < -tol)):
        bad = np.flatnonzero(empty & (rhs < -tol))[0]
        presolve_family = str(fam[bad])
        presolve_message = f"{fam[bad]}[{idx[bad]}] violated by the boundary speeds alone"
    fam, idx, cols, vals, rhs = fam[~empty], idx[~empty], cols[~empty], vals[~empty], rhs[~empty]

    kv = np.arange(m)
    cone_cols_full = np.column_stack([2 * kv + 1, 2 * kv, 2 * kv + 2])
    base = np.array([[-1.0, -1.0, -1.0], [-1.0, 1.0, 1.0], [0.0, 0.0, 0.0]]) / _R2
    cone_G = np.broadcast_to(base, (m, 3, 3)).copy()
    cone_h = np.tile([0.0, 0.0, _R2], (m, 1))
    cp = pinned_full[cone_cols_full]
    cone_h -= np.einsum("brj,bj->br", cone_G, np.where(cp, pin_val[cone_cols_full], 0.0))
    cone_G = np.where(cp[:, None, :], 0.0, cone_G)
    cone_cols = np.where(cp, -1, reduced[cone_cols_full])

    q = np.zeros(n_var)
    var_of_c = reduced[2 * kv + 1]
    q[var_of_c] = 2.0 * p.ds

    prog = StencilProgram(
        n_var=n_var,
        q=q,
        lp_cols=cols,
        lp_vals=vals,
        lp_h=rhs,
        cone_cols=cone_cols,
        cone_G=cone_G,
        cone_h=cone_h,
    )
    return ConicProgram(
        program=prog,
        var_of_v=reduced[2 * np.arange(n)],
        var_of_c=var_of_c,
        pinned=dict(p.pinned),
        lp_family=fam,
        lp_index=idx,
        presolve_family=presolve_family,
        presolve_message=presolve_message,
        families=tuple(dict.fromkeys(fam.tolist())),
    )


def _unpack(cp: ConicProgram, p: DiscretizedProblem, x):
    v = np.empty(p.n)
    free = cp.var_of_v >= 0
    v[free] = x[cp.var_of_v[free]]
    for k, val in cp.pinned.items():
        v[k] = val
    return v, x[cp.var_of_c]


def recover_slack(p: DiscretizedProblem, v):
    """Smallest slack compatible with the cone and acceleration rows for fixed v."""
    vsum = v[:-1] + v[1:]
    dv = np.diff(v)
    with np.errstate(divide="ignore"):
        return np.maximum.reduce([1.0 / vsum, dv / p.abar, -dv / -p.aunder])


def _polish(p: DiscretizedProblem, v):
    v = np.clip(v, 0.0, p.vcap)
    for k, val in p.pinned.items():
        v[k] = val
    return v, recover_slack(p, v)


def _primal_residual(cp: ConicProgram, p, v, c):
    x = np.zeros(cp.program.n_var)
    free = cp.var_of_v >= 0
    x[cp.var_of_v[free]] = v[free]
    x[cp.var_of_c] = c
    gl, _ = cp.program.matvec(x)
    lp = np.maximum(gl - cp.program.lp_h, 0.0).max(initial=0.0)
    cone = np.maximum(1.0 - c * (v[:-1] + v[1:]), 0.0).max(initial=0.0)
    return float(max(lp, cone))


def _family_of_certificate(cp: ConicProgram, z_lp):
    if len(z_lp) == 0:
        return "cone"
    weights = {}
    for f, zval in zip(cp.lp_family, np.abs(z_lp)):
        weights[f] = weights.get(f, 0.0) + zval
    return max(weights, key=weights.get)


def _solve_ipm(cp: ConicProgram, st: SolverSettings):
    res = solve_ipm(cp.program, IPMSettings(st.tol_feas, st.tol_gap, st.max_iter))
    return res.status, res.x, res.z_lp, res.iterations, res.message


def _solve_clarabel(cp: ConicProgram, st: SolverSettings):
    try:
        import clarabel
    except ImportError:
        raise InputError("the clarabel backend needs the optional 'clarabel' package") from None
    import scipy.sparse as sp

    prog = cp.program
    ml, mc = prog.m_lp, prog.m_cone
    rows, cols, vals = [], [], []
    r_l = np.repeat(np.arange(ml), 3)
    c_l = prog.lp_cols.ravel()
    v_l = prog.lp_vals.ravel()
    rows.append(r_l), cols.append(c_l), vals.append(v_l)
    r_c = ml + (3 * np.arange(mc)[:, None, None] + np.arange(3)[None, :, None])
    r_c = np.broadcast_to(r_c, (mc, 3, 3)).ravel()
    c_c = np.broadcast_to(prog.cone_cols[:, None, :], (mc, 3, 3)).ravel()
    rows.append(r_c), cols.append(c_c), vals.append(prog.cone_G.ravel())
    r, c, v = (np.concatenate(a) for a in (rows, cols, vals))
    ok = (c >= 0) & (v != 0)
    A = sp.csc_matrix((v[ok], (r[ok], c[ok])), shape=(ml + 3 * mc, prog.n_var))
    b = np.concatenate([prog.lp_h, prog.cone_h.ravel()])
    P = sp.csc_matrix((prog.n_var, prog.n_var))
    cones = [clarabel.NonnegativeConeT(ml)] + [clarabel.SecondOrderConeT(3)] * mc
    s = clarabel.DefaultSettings()
    s.verbose = False
    s.max_iter = st.max_iter
    s.tol_feas = st.tol_feas
    s.tol_gap_abs = st.tol_gap
    s.tol_gap_rel = st.tol_gap
    sol = clarabel.DefaultSolver(P, prog.q, A, b, cones, s).solve()
    name = str(sol.status)
    if "Solved" in name and "Almost" not in name:
        status = OPTIMAL
    elif "Infeasible" in name and "Dual" not in name:
        status = INFEASIBLE
    else:
        status = MAX_ITER
    z = np.asarray(sol.z)[:ml]
    return status, np.asarray(sol.x), z, int(sol.iterations), name


BACKENDS = {"ipm": _solve_ipm, "clarabel": _solve_clarabel}


def solve(p: DiscretizedProblem, settings: SolverSettings | None = None) -> Solution:
    """Minimise the traversal time of ``p``.

    Returns a :class:`Solution` whose status is ``optimal``, ``infeasible``
    (with the constraint family carrying the certificate named) or
    ``max-iterations``.  On success the slack is recomputed from the speeds
    as the smallest value the cone and acceleration rows allow, so the
    reported objective is the traversal time of the returned profile.
    """
    st = settings or SolverSettings()
    t0 = time.perf_counter()
    cp = build_program(p)
    empty_v, empty_c = np.full(p.n, np.nan), np.full(p.n_segments, np.nan)
    if cp.presolve_family is not None:
        return Solution(
            INFEASIBLE, empty_v, empty_c, float("nan"), 0, time.perf_counter() - t0,
            message=cp.presolve_message, infeasible_family=cp.presolve_family,
        )

    status, x, z_lp, iters, message = BACKENDS[st.backend](cp, st)
    elapsed = time.perf_counter() - t0
    if status == INFEASIBLE:
        return Solution(
            status, empty_v, empty_c, float("nan"), iters, elapsed,
            message=message, infeasible_family=_family_of_certificate(cp, z_lp),
        )
    v, _ = _unpack(cp, p, x)
    if status != OPTIMAL:
        return Solution(status, v, empty_c, float("nan"), iters, elapsed, message=message)
    v, c = _polish(p, v)
    if np.any(v[:-1] + v[1:] <= V_SUM_MIN):
        k = int(np.argmin(v[:-1] + v[1:]))
        return Solution(
            INFEASIBLE, v, c, float("nan"), iters, elapsed,
            message=f"segment {k} cannot be traversed with positive speed",
            infeasible_family="cone",
        )
    obj = float(np.sum(2.0 * p.ds * c))
    return Solution(
        status, v, c, obj, iters, time.perf_counter() - t0,
        message=message, primal_residual=_primal_residual(cp, p, v, c),
    )
