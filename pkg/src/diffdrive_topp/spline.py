"""Clamped B-spline fitting and sampling of planar waypoint paths.

Waypoints are interpolated by a non-rational B-spline whose breakpoints are
spaced by chord length.  The curve is then sampled at a fixed parameter
resolution to produce the initial trajectory (pose + curvature samples)
consumed by :mod:`diffdrive_topp.discretize`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (
    DegeneratePathError,
    DegenerateTangentError,
    DomainError,
    InputError,
    SingularFitError,
)

TANGENT_EPS = 1e-9


def wrap_angle(a):
    """Wrap angles to (-pi, pi]."""
    a = np.asarray(a, dtype=float)
    w = np.mod(a + np.pi, 2.0 * np.pi) - np.pi
    w = np.where(w <= -np.pi, w + 2.0 * np.pi, w)
    return w if w.ndim else float(w)


@dataclass(frozen=True)
class WaypointPath:
    points: np.ndarray
    eps_ds: float = 1e-6

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise InputError(f"waypoints must be an (l, 2) array, got shape {pts.shape}")
        if len(pts) < 2:
            raise InputError(f"need at least 2 waypoints, got {len(pts)}")
        if not np.all(np.isfinite(pts)):
            raise InputError("waypoints contain non-finite coordinates")
        chords = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        bad = np.flatnonzero(chords <= self.eps_ds)
        if bad.size:
            raise DegeneratePathError(
                f"waypoints {bad[0]} and {bad[0] + 1} coincide (chord {chords[bad[0]]:.3g} m)"
            )
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.points)

    @property
    def chords(self):
        return np.linalg.norm(np.diff(self.points, axis=0), axis=1)


@dataclass(frozen=True)
class InitialTrajectory:
    """Fixed-resolution samples of the geometric path.

    ``theta`` is wrapped to (-pi, pi]; ``kappa`` is unsigned curvature (1/m).
    ``resolution`` is the parameter step between samples (``nan`` when the
    samples were supplied directly rather than drawn from a curve).
    """

    x: np.ndarray
    y: np.ndarray
    theta: np.ndarray
    kappa: np.ndarray
    resolution: float = float("nan")
    param: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        arrs = [np.asarray(a, dtype=float) for a in (self.x, self.y, self.theta, self.kappa)]
        n = len(arrs[0])
        if any(a.ndim != 1 or len(a) != n for a in arrs):
            raise InputError("x, y, theta, kappa must be 1-D arrays of equal length")
        if n < 2:
            raise InputError(f"an initial trajectory needs at least 2 samples, got {n}")
        if not all(np.all(np.isfinite(a)) for a in arrs):
            raise InputError("trajectory samples contain non-finite values")
        if np.any(arrs[3] < 0):
            raise InputError("curvature must be non-negative")
        for name, a in zip(("x", "y", "theta", "kappa"), arrs):
            object.__setattr__(self, name, a)
        object.__setattr__(self, "theta", wrap_angle(arrs[2]))

    def __len__(self):
        return len(self.x)

    @property
    def points(self):
        return np.column_stack([self.x, self.y])


# ---------------------------------------------------------------------------
# basis functions


def basis(i, p, u, U):
    """Cox-de Boor value of the i-th degree-p basis function at ``u``.

    Degree-0 functions are indicators of the half-open span ``[U[i], U[i+1])``,
    except that the last non-empty span also contains its right end so the
    basis sums to one on the whole closed domain.  0/0 terms count as 0.
    """
    U = np.asarray(U, dtype=float)
    if i < 0 or p < 0 or i + p + 1 >= len(U):
        raise IndexError(f"basis index i={i}, p={p} out of range for {len(U)} knots")

    last = int(np.flatnonzero(U[1:] > U[:-1])[-1]) if np.any(U[1:] > U[:-1]) else -1

    def rec(i, p):
        if p == 0:
            if U[i] <= u < U[i + 1]:
                return 1.0
            return 1.0 if (i == last and u == U[i + 1]) else 0.0
        val = 0.0
        den = U[i + p] - U[i]
        if den != 0.0:
            val += (u - U[i]) / den * rec(i, p - 1)
        den = U[i + p + 1] - U[i + 1]
        if den != 0.0:
            val += (U[i + p + 1] - u) / den * rec(i + 1, p - 1)
        return val

    return rec(i, p)


def _find_spans(U, p, n_ctrl, u):
    spans = np.searchsorted(U, u, side="right") - 1
    return np.clip(spans, p, n_ctrl - 1)


def _basis_funs(U, p, spans, u):
    """Non-zero basis values for every (span, u) pair, shape (len(u), p + 1)."""
    m = len(u)
    N = np.zeros((m, p + 1))
    N[:, 0] = 1.0
    left = np.zeros((m, p + 1))
    right = np.zeros((m, p + 1))
    for j in range(1, p + 1):
        left[:, j] = u - U[spans + 1 - j]
        right[:, j] = U[spans + j] - u
        saved = np.zeros(m)
        for r in range(j):
            temp = N[:, r] / (right[:, r + 1] + left[:, j - r])
            N[:, r] = saved + right[:, r + 1] * temp
            saved = left[:, j - r] * temp
        N[:, j] = saved
    return N


def _collocation(U, p, n_ctrl, u):
    """Sparse matrix whose rows map control points to curve values at ``u``."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    spans = _find_spans(U, p, n_ctrl, u)
    N = _basis_funs(U, p, spans, u)
    rows = np.repeat(np.arange(len(u)), p + 1)
    cols = (spans[:, None] - p + np.arange(p + 1)[None, :]).ravel()
    return sp.csr_matrix((N.ravel(), (rows, cols)), shape=(len(u), n_ctrl))


def _derivative_matrix(U, p):
    """Map control points of a degree-p curve to those of its derivative curve."""
    n_ctrl = len(U) - p - 1
    den = U[p + 1 : p + n_ctrl] - U[1:n_ctrl]
    with np.errstate(divide="ignore", invalid="ignore"):
        coef = np.where(den > 0, p / den, 0.0)
    rows = np.repeat(np.arange(n_ctrl - 1), 2)
    cols = np.column_stack([np.arange(n_ctrl - 1), np.arange(1, n_ctrl)]).ravel()
    data = np.column_stack([-coef, coef]).ravel()
    return sp.csr_matrix((data, (rows, cols)), shape=(n_ctrl - 1, n_ctrl))


def _derivative_collocation(U, p, u, order):
    """Rows mapping control points to the order-th derivative at ``u``."""
    n_ctrl = len(U) - p - 1
    D = sp.identity(n_ctrl, format="csr")
    Uk, pk = U, p
    for _ in range(order):
        D = _derivative_matrix(Uk, pk) @ D
        Uk, pk = Uk[1:-1], pk - 1
    return _collocation(Uk, pk, len(Uk) - pk - 1, u) @ D


# ---------------------------------------------------------------------------
# curve


@dataclass(frozen=True)
class BSplineCurve:
    """Planar non-rational B-spline.

    Attributes:
        degree: polynomial degree p.
        knots: non-decreasing knot vector of length ``len(control_points) + p + 1``.
        control_points: array of shape (K, 2).
    """

    degree: int
    knots: np.ndarray
    control_points: np.ndarray

    def __post_init__(self):
        U = np.asarray(self.knots, dtype=float)
        Q = np.asarray(self.control_points, dtype=float)
        if self.degree < 1:
            raise ValueError("degree must be >= 1")
        if np.any(np.diff(U) < 0):
            raise ValueError("knot vector must be non-decreasing")
        if Q.ndim != 2 or Q.shape[1] != 2:
            raise ValueError("control points must have shape (K, 2)")
        if len(U) != len(Q) + self.degree + 1:
            raise ValueError(
                f"{len(Q)} control points of degree {self.degree} need "
                f"{len(Q) + self.degree + 1} knots, got {len(U)}"
            )
        object.__setattr__(self, "knots", U)
        object.__setattr__(self, "control_points", Q)

    @property
    def domain(self):
        p = self.degree
        return float(self.knots[p]), float(self.knots[-p - 1])

    def _check(self, u):
        u = np.asarray(u, dtype=float)
        lo, hi = self.domain
        tol = 1e-12 * max(1.0, abs(hi))
        if np.any(u < lo - tol) or np.any(u > hi + tol):
            raise DomainError(f"parameter outside curve domain [{lo}, {hi}]")
        return np.clip(u, lo, hi)

    def _apply(self, M, scalar):
        out = M @ self.control_points
        return out[0] if scalar else out

    def evaluate(self, u):
        """Curve point(s) at ``u``; returns shape (2,) or (m, 2)."""
        scalar = np.ndim(u) == 0
        u = self._check(u)
        M = _collocation(self.knots, self.degree, len(self.control_points), u)
        return self._apply(M, scalar)

    def derivative(self, u, order=1):
        """Analytic derivative of the curve with respect to the parameter."""
        if order < 0 or order > self.degree:
            raise ValueError(f"derivative order {order} exceeds degree {self.degree}")
        if order == 0:
            return self.evaluate(u)
        scalar = np.ndim(u) == 0
        u = self._check(u)
        M = _derivative_collocation(self.knots, self.degree, np.atleast_1d(u), order)
        return self._apply(M, scalar)

    def heading(self, u):
        """Four-quadrant tangent angle in (-pi, pi]."""
        d = np.atleast_2d(self.derivative(u, 1))
        nrm = np.hypot(d[:, 0], d[:, 1])
        if np.any(nrm < TANGENT_EPS):
            raise DegenerateTangentError("tangent vanishes; heading undefined")
        th = wrap_angle(np.arctan2(d[:, 1], d[:, 0]))
        return float(th[0]) if np.ndim(u) == 0 else th

    def curvature(self, u):
        """Unsigned curvature |x'y'' - y'x''| / |C'|^3."""
        if self.degree < 2:
            raise ValueError("curvature needs degree >= 2")
        d1 = np.atleast_2d(self.derivative(u, 1))
        d2 = np.atleast_2d(self.derivative(u, 2))
        nrm = np.hypot(d1[:, 0], d1[:, 1])
        if np.any(nrm < TANGENT_EPS):
            raise DegenerateTangentError("tangent vanishes; curvature undefined")
        k = np.abs(d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]) / nrm**3
        return float(k[0]) if np.ndim(u) == 0 else k


# ---------------------------------------------------------------------------
# fitting


def chord_parameters(w: WaypointPath, u0=None):
    """Breakpoint parameters: each chord advances by ``u0 * d_i / d_0``.

    ``d_0`` is the first chord.  ``u0`` defaults to ``d_0`` which makes the
    parameter equal to cumulative chord length.
    """
    d = w.chords
    if u0 is None:
        u0 = d[0]
    if not u0 > 0:
        raise ValueError(f"u0 must be > 0, got {u0}")
    return np.concatenate([[0.0], np.cumsum(u0 * d / d[0])])


def chord_length_knots(w: WaypointPath, p=3, u0=None):
    """Clamped knot vector with chord-length interior knots, length ``l + 2p``."""
    t = chord_parameters(w, u0)
    return np.concatenate([np.full(p + 1, t[0]), t[1:-1], np.full(p + 1, t[-1])])


def _end_conditions(p):
    """(order, at_end) pairs closing the interpolation system: p - 1 of them."""
    return [(2 + k // 2, bool(k % 2)) for k in range(p - 1)]


def fit(w: WaypointPath, p=3, u0=None):
    """Interpolating B-spline through every waypoint.

    Waypoint j is interpolated at its chord parameter.  The remaining
    ``p - 1`` degrees of freedom are fixed by natural end conditions
    (vanishing second derivatives at both ends for a cubic).

    Raises:
        InputError: fewer than ``p + 1`` waypoints.
        SingularFitError: the collocation system could not be solved.
    """
    if len(w) < p + 1:
        raise InputError(f"degree {p} fit needs at least {p + 1} waypoints, got {len(w)}")
    t = chord_parameters(w, u0)
    U = chord_length_knots(w, p, u0)
    n_ctrl = len(w) + p - 1

    blocks = [_collocation(U, p, n_ctrl, t)]
    rhs = [w.points]
    for order, at_end in _end_conditions(p):
        blocks.append(_derivative_collocation(U, p, [t[-1] if at_end else t[0]], order))
        rhs.append(np.zeros((1, 2)))
    A = sp.vstack(blocks, format="csc")
    b = np.vstack(rhs)
    try:
        Q = spla.spsolve(A, b)
    except RuntimeError as exc:
        raise SingularFitError(str(exc)) from exc
    Q = np.asarray(Q).reshape(n_ctrl, 2)
    if not np.all(np.isfinite(Q)):
        raise SingularFitError("interpolation system is singular")
    scale = max(1.0, float(np.abs(w.points).max()))
    if np.abs(A @ Q - b).max() > 1e-8 * scale:
        raise SingularFitError("interpolation system is ill-conditioned")
    return BSplineCurve(p, U, Q)


def sample_initial_trajectory(c: BSplineCurve, resolution):
    """Sample pose and curvature at a fixed parameter step.

    ``floor(L / resolution) + 1`` samples are drawn over the clamped domain of
    length L; the final sample is moved onto the domain end.
    """
    lo, hi = c.domain
    length = hi - lo
    if not length > 0:
        raise DomainError("empty curve domain")
    if not 0 < resolution < length:
        raise ValueError(f"resolution must be in (0, {length}), got {resolution}")
    n = int(math.floor(length / resolution + 1e-9)) + 1
    u = lo + resolution * np.arange(n)
    u[-1] = hi
    pts = c.evaluate(u)
    theta = c.heading(u)
    kappa = c.curvature(u) if c.degree >= 2 else np.zeros(n)
    return InitialTrajectory(pts[:, 0], pts[:, 1], theta, kappa, resolution=resolution, param=u)
