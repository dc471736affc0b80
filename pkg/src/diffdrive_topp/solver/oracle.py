"""Brute-force dynamic-programming oracle for the speed profile.

Each node k gets ``M + 1`` uniformly spaced speed levels on ``[0, vcap_k]``.
A transition between consecutive levels is allowed when the pair satisfies
the physical acceleration bound on ``v_{k+1}^2 - v_k^2``, the angular and
wheel-speed rows, and has positive mean speed; its cost is the segment time
``2 ds / (v_k + v_{k+1})``.  Any grid path is feasible for the continuous
problem, so the oracle's time upper-bounds the conic optimum.
"""

from __future__ import annotations

import numpy as np

from ..errors import GuardError, NoFeasiblePathError

GUARD = 1e8


def _allowed(p, k, va, vb, tol):
    s = va + vb
    ok = s > 0
    dv2 = vb * vb - va * va
    ok &= (dv2 >= p.aunder[k] - tol) & (dv2 <= p.abar[k] + tol)
    if p.angular_active[k]:
        ok &= (s >= p.wunder[k] - tol) & (s <= p.wbar[k] + tol)
    if p.joint_active[k]:
        g, jl = p.g[k], p.joint
        combos = [
            ((1 + g) * va + g * vb, jl.v_r_min, jl.v_r_max),
            ((1 - g) * va - g * vb, jl.v_l_min, jl.v_l_max),
        ]
        if p.strict_joint:
            combos += [
                (g * va + (1 + g) * vb, jl.v_r_min, jl.v_r_max),
                (-g * va + (1 - g) * vb, jl.v_l_min, jl.v_l_max),
            ]
        for expr, lo, hi in combos:
            ok &= (expr >= lo - tol) & (expr <= hi + tol)
    return ok


def dp_oracle(p, grid_size: int, guard: float = GUARD):
    """Minimum traversal time over the speed grid.

    Args:
        p: a :class:`~diffdrive_topp.discretize.DiscretizedProblem`.
        grid_size: M; every node gets ``M + 1`` levels.
        guard: refuse instances with ``n * M**2`` above this.

    Returns:
        ``(t_f, v)`` for the best grid profile.

    Raises:
        GuardError: instance too large.
        NoFeasiblePathError: no grid profile satisfies every row.
    """
    M = int(grid_size)
    if M < 1:
        raise ValueError("grid_size must be >= 1")
    n = p.n
    if n * M * M > guard:
        raise GuardError(f"n * M^2 = {n * M * M:.3g} exceeds the oracle guard {guard:.3g}")

    frac = np.arange(M + 1) / M
    grids = [p.vcap[k] * frac for k in range(n)]
    for k, val in p.pinned.items():
        # boundary speeds (and omega-pinned neighbours) snap to the nearest level
        j = int(np.clip(np.rint(val / p.vcap[k] * M), 0, M)) if p.vcap[k] > 0 else 0
        grids[k] = grids[k][j : j + 1]

    tol = 1e-12
    value = np.zeros(len(grids[0]))
    back = []
    for k in range(n - 1):
        va = grids[k][:, None]
        vb = grids[k + 1][None, :]
        ok = _allowed(p, k, va, vb, tol)
        with np.errstate(divide="ignore"):
            cost = np.where(ok, 2.0 * p.ds[k] / np.where(ok, va + vb, 1.0), np.inf)
        total = value[:, None] + cost
        arg = np.argmin(total, axis=0)
        value = total[arg, np.arange(total.shape[1])]
        back.append(arg)
        if not np.any(np.isfinite(value)):
            raise NoFeasiblePathError(f"no grid-feasible speed reaches node {k + 1}")

    j = int(np.argmin(value))
    t_f = float(value[j])
    if not np.isfinite(t_f):
        raise NoFeasiblePathError("no grid-feasible speed profile")
    idx = [j]
    for arg in reversed(back):
        idx.append(int(arg[idx[-1]]))
    idx.reverse()
    v = np.array([grids[k][i] for k, i in enumerate(idx)])
    return t_f, v
