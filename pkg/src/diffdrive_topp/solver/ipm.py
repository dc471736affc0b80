"""Primal-dual interior-point method for small-stencil cone programs.

Solves::

    minimize    q'x
    subject to  G x + s = h,   s in R_+^{m_l} x SOC_3^{m_c}

where every row of ``G`` touches at most three variables and the three rows
of each 3-dimensional second-order cone share one column triple.  With a
suitable variable ordering the normal-equation matrix ``G' W^-2 G`` is then
banded and is factored with a banded Cholesky.

The iteration is the homogeneous self-dual embedding with Nesterov-Todd
scaling and a Mehrotra predictor-corrector, so infeasibility is detected
from certificates rather than by a separate phase-one solve.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg import LinAlgError, cho_solve_banded, cholesky_banded

log = logging.getLogger(__name__)

_J = np.array([1.0, -1.0, -1.0])
_E = np.array([1.0, 0.0, 0.0])

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
MAX_ITER = "max-iterations"


@dataclass
class StencilProgram:
    """Cone program in compact row-stencil form.

    Attributes:
        n_var: number of variables.
        q: objective, shape (n_var,).
        lp_cols, lp_vals: (m_l, 3) column indices / coefficients of the linear
            rows; unused slots carry column ``-1`` and value 0.
        lp_h: (m_l,) right-hand sides.
        cone_cols: (m_c, 3) column triple of each cone block (``-1`` = unused).
        cone_G: (m_c, 3, 3) coefficients; ``cone_G[b, r, j]`` multiplies
            variable ``cone_cols[b, j]`` in row r of block b.
        cone_h: (m_c, 3) right-hand sides.
    """

    n_var: int
    q: np.ndarray
    lp_cols: np.ndarray
    lp_vals: np.ndarray
    lp_h: np.ndarray
    cone_cols: np.ndarray
    cone_G: np.ndarray
    cone_h: np.ndarray

    @property
    def m_lp(self):
        return len(self.lp_h)

    @property
    def m_cone(self):
        return len(self.cone_h)

    def __post_init__(self):
        n = self.n_var
        ml, mc = len(self.lp_h), len(self.cone_h)
        r = np.repeat(np.arange(ml), 3)
        c, v = self.lp_cols.ravel(), self.lp_vals.ravel()
        ok = c >= 0
        self._gl = sp.csr_matrix((v[ok], (r[ok], c[ok])), shape=(ml, n))
        r = np.broadcast_to(np.arange(3 * mc).reshape(mc, 3, 1), (mc, 3, 3)).ravel()
        c = np.broadcast_to(self.cone_cols[:, None, :], (mc, 3, 3)).ravel()
        v = self.cone_G.ravel()
        ok = c >= 0
        self._gc = sp.csr_matrix((v[ok], (r[ok], c[ok])), shape=(3 * mc, n))
        self._glt = self._gl.T.tocsr()
        self._gct = self._gc.T.tocsr()

    def matvec(self, x):
        """Return ``(G_lp x, G_cone x)``."""
        return self._gl @ x, (self._gc @ x).reshape(-1, 3)

    def rmatvec(self, zl, zc):
        """Return ``G' z`` for a split dual vector."""
        return self._glt @ zl + self._gct @ zc.ravel()

    def bandwidth(self):
        b = 0
        for cols in (self.lp_cols, self.cone_cols):
            if len(cols):
                valid = cols >= 0
                hi = np.where(valid, cols, -1).max(axis=1)
                lo = np.where(valid, cols, self.n_var).min(axis=1)
                span = np.where(hi >= 0, hi - lo, 0)
                b = max(b, int(span.max()))
        return b


@dataclass
class IPMSettings:
    tol_feas: float = 1e-8
    tol_gap: float = 1e-8
    max_iter: int = 200
    step_fraction: float = 0.99


@dataclass
class IPMResult:
    status: str
    x: np.ndarray
    s_lp: np.ndarray
    s_cone: np.ndarray
    z_lp: np.ndarray
    z_cone: np.ndarray
    iterations: int
    pres: float
    dres: float
    gap: float
    message: str = ""


# ---------------------------------------------------------------------------
# cone algebra, vectorised over 3-dimensional blocks


def _jdot(u, v):
    return u[:, 0] * v[:, 0] - u[:, 1] * v[:, 1] - u[:, 2] * v[:, 2]


def _jprod(u, v):
    out = np.empty_like(u)
    out[:, 0] = np.einsum("ij,ij->i", u, v)
    out[:, 1:] = u[:, :1] * v[:, 1:] + v[:, :1] * u[:, 1:]
    return out


def _jsolve(lam, d):
    """Solve ``lam o w = d`` for w."""
    det = _jdot(lam, lam)
    w0 = (lam[:, 0] * d[:, 0] - np.einsum("ij,ij->i", lam[:, 1:], d[:, 1:])) / det
    w = np.empty_like(d)
    w[:, 0] = w0
    w[:, 1:] = (d[:, 1:] - w0[:, None] * lam[:, 1:]) / lam[:, :1]
    return w


class _Scaling:
    """Nesterov-Todd scaling for the current (s, z)."""

    def __init__(self, s_l, z_l, s_c, z_c):
        self.wl = np.sqrt(s_l / z_l)
        self.lam_l = np.sqrt(s_l * z_l)
        sn = np.sqrt(_jdot(s_c, s_c))
        zn = np.sqrt(_jdot(z_c, z_c))
        sb = s_c / sn[:, None]
        zb = z_c / zn[:, None]
        gamma = np.sqrt(0.5 * (1.0 + np.einsum("ij,ij->i", sb, zb)))
        self.w = (sb + zb * _J) / (2.0 * gamma[:, None])
        self.beta = np.sqrt(sn / zn)
        self.lam_c = self.apply_c(z_c)
        w = self.w
        wbar = np.empty((len(w), 3, 3))
        wbar[:, 0, 0] = w[:, 0]
        wbar[:, 0, 1:] = w[:, 1:]
        wbar[:, 1:, 0] = w[:, 1:]
        wbar[:, 1:, 1:] = np.eye(2) + w[:, 1:, None] * w[:, None, 1:] / (1.0 + w[:, 0])[
            :, None, None
        ]
        # W^-1 = J Wbar J / beta
        self.winv = wbar * np.outer(_J, _J) / self.beta[:, None, None]

    def _wbar(self, v):
        w = self.w
        w1v1 = np.einsum("ij,ij->i", w[:, 1:], v[:, 1:])
        out = np.empty_like(v)
        out[:, 0] = w[:, 0] * v[:, 0] + w1v1
        out[:, 1:] = (
            v[:, :1] * w[:, 1:]
            + v[:, 1:]
            + (w1v1 / (1.0 + w[:, 0]))[:, None] * w[:, 1:]
        )
        return out

    def apply_c(self, v):
        return self.beta[:, None] * self._wbar(v)

    def apply_inv_c(self, v):
        return (self._wbar(v * _J) * _J) / self.beta[:, None]


def _max_step_lp(u, d):
    neg = d < 0
    if not np.any(neg):
        return np.inf
    return float(np.min(-u[neg] / d[neg]))


def _max_step_soc(u, d):
    """Largest alpha with u + alpha d in the closed cone (u strictly inside)."""
    if len(u) == 0:
        return np.inf
    a = _jdot(d, d)
    b = _jdot(u, d)
    c = _jdot(u, u)
    disc = np.maximum(b * b - a * c, 0.0)
    sq = np.sqrt(disc)
    alpha = np.full(len(u), np.inf)

    neg_a = a < 0
    # one positive root; pick the cancellation-free expression
    with np.errstate(divide="ignore", invalid="ignore"):
        r_neg = np.where(b > 0, (b + sq) / -a, c / (sq - b))
        r_pos = c / (-b + sq)  # d strictly inside -K: nearer root
        r_lin = -c / (2.0 * b)
    alpha = np.where(neg_a, r_neg, alpha)
    pos_a = (a > 0) & (d[:, 0] < 0)
    alpha = np.where(pos_a, r_pos, alpha)
    zero_a = (a == 0) & (b < 0)
    alpha = np.where(zero_a, r_lin, alpha)
    alpha = np.where(np.isfinite(alpha) & (alpha >= 0), alpha, np.inf)
    return float(alpha.min())


def _interior_shift(u_l, u_c):
    """Shift a vector into the cone interior the way the standard initialisation does."""
    parts = []
    if len(u_l):
        parts.append(-u_l.min())
    if len(u_c):
        parts.append((np.linalg.norm(u_c[:, 1:], axis=1) - u_c[:, 0]).max())
    alpha = max(parts) if parts else -1.0
    if alpha >= -1e-8 * max(1.0, float(np.abs(np.concatenate([u_l, u_c.ravel()])).max(initial=0))):
        u_l = u_l + (1.0 + alpha)
        u_c = u_c + (1.0 + alpha) * _E
    return u_l, u_c


class _NormalMatrix:
    """Banded factorisation of ``G' D G`` for block-diagonal D."""

    def __init__(self, prog: StencilProgram, bw: int):
        self.prog = prog
        self.bw = bw
        n = prog.n_var
        # flat positions into the (bw+1, n) upper banded array for every
        # (row-slot a, row-slot b) pair, -1 where a pair is unused/below diagonal
        self.lp_pos = self._positions(prog.lp_cols, n)
        self.cone_pos = self._positions(prog.cone_cols, n)

    def _positions(self, cols, n):
        ci = cols[:, :, None]
        cj = cols[:, None, :]
        valid = (ci >= 0) & (cj >= 0) & (ci <= cj)
        pos = (self.bw + ci - cj) * n + cj
        return np.where(valid, pos, -1)

    def assemble(self, d_lp, winv_cone):
        """Banded ``G_l' diag(d_lp) G_l + sum_b (W_b^-1 G_b)' (W_b^-1 G_b)``."""
        p = self.prog
        n = p.n_var
        loc_l = d_lp[:, None, None] * p.lp_vals[:, :, None] * p.lp_vals[:, None, :]
        gbar = np.einsum("brs,bsj->brj", winv_cone, p.cone_G)
        loc_c = np.einsum("bri,brj->bij", gbar, gbar)
        pos = np.concatenate([self.lp_pos.ravel(), self.cone_pos.ravel()])
        val = np.concatenate([loc_l.ravel(), loc_c.ravel()])
        keep = pos >= 0
        ab = np.bincount(pos[keep], val[keep], minlength=(self.bw + 1) * n)
        return ab.reshape(self.bw + 1, n)

    def factor(self, ab):
        diag = ab[self.bw]
        scale = max(float(diag.max(initial=0.0)), 1e-300)
        reg = 0.0
        for _ in range(12):
            try:
                work = ab.copy()
                work[self.bw] += reg
                return cholesky_banded(work, lower=False, check_finite=False)
            except LinAlgError:
                reg = scale * 1e-15 if reg == 0.0 else reg * 100.0
        raise LinAlgError("normal matrix is not positive definite")


def _residuals(prog, x, s_l, s_c, z_l, z_c, tau, kappa):
    gl, gc = prog.matvec(x)
    rz_l = gl + s_l - tau * prog.lp_h
    rz_c = gc + s_c - tau * prog.cone_h
    rx = prog.rmatvec(z_l, z_c) + tau * prog.q
    hz = prog.lp_h @ z_l + np.sum(prog.cone_h * z_c)
    qx = prog.q @ x
    rt = kappa + qx + hz
    return rx, rz_l, rz_c, rt, qx, hz, gl, gc


def solve_ipm(prog: StencilProgram, settings: IPMSettings | None = None) -> IPMResult:
    st = settings or IPMSettings()
    n, ml, mc = prog.n_var, prog.m_lp, prog.m_cone
    nu = ml + mc
    bw = max(prog.bandwidth(), 1)
    normal = _NormalMatrix(prog, bw)
    qnorm = max(1.0, float(np.abs(prog.q).max(initial=0.0)))

    # -- initial point: least-squares primal, least-norm dual ---------------
    ident_c = np.broadcast_to(np.eye(3), (mc, 3, 3))
    chol0 = normal.factor(normal.assemble(np.ones(ml), ident_c))
    x = cho_solve_banded((chol0, False), prog.rmatvec(prog.lp_h, prog.cone_h), check_finite=False)
    gl, gc = prog.matvec(x)
    s_l, s_c = _interior_shift(prog.lp_h - gl, prog.cone_h - gc)
    y = cho_solve_banded((chol0, False), -prog.q, check_finite=False)
    z_l, z_c = _interior_shift(*prog.matvec(y))
    tau = kappa = 1.0

    status, message = MAX_ITER, "iteration limit reached"
    pres = dres = gap = np.inf
    it = 0
    for it in range(st.max_iter + 1):
        rx, rz_l, rz_c, rt, qx, hz, _, _ = _residuals(prog, x, s_l, s_c, z_l, z_c, tau, kappa)
        sz = s_l @ z_l + np.sum(s_c * z_c)
        mu = (sz + tau * kappa) / (nu + 1)

        pres = max(np.abs(rz_l).max(initial=0.0), np.abs(rz_c).max(initial=0.0)) / tau
        dres = np.abs(rx).max(initial=0.0) / tau / qnorm
        pcost, dcost = qx / tau, -hz / tau
        gap = sz / tau**2
        relgap = gap / max(abs(pcost), abs(dcost), 1e-12)
        log.debug(
            "it %3d pcost %.9e dcost %.9e gap %.2e pres %.2e dres %.2e tau %.2e kappa %.2e",
            it, pcost, dcost, gap, pres, dres, tau, kappa,
        )
        if not np.isfinite(pres + dres + gap + tau + kappa):
            message = "numerical failure: non-finite iterate"
            break
        if pres <= st.tol_feas and dres <= st.tol_feas and relgap <= st.tol_gap:
            status, message = OPTIMAL, "converged"
            break
        if hz < 0:
            gtz = prog.rmatvec(z_l, z_c)
            if np.abs(gtz).max(initial=0.0) / qnorm / -hz <= st.tol_feas:
                status, message = INFEASIBLE, "primal infeasibility certificate found"
                break
        if qx < 0:
            gl0, gc0 = prog.matvec(x)
            r = max(np.abs(gl0 + s_l).max(initial=0.0), np.abs(gc0 + s_c).max(initial=0.0))
            if r / -qx <= st.tol_feas:
                status, message = UNBOUNDED, "dual infeasibility certificate found"
                break
        if it == st.max_iter:
            break

        sc = _Scaling(s_l, z_l, s_c, z_c)
        d_lp = z_l / s_l
        try:
            chol = normal.factor(normal.assemble(d_lp, sc.winv))
        except LinAlgError as exc:
            message = f"numerical failure: {exc}"
            break

        def winv(vl, vc):
            return vl / sc.wl, np.einsum("bij,bj->bi", sc.winv, vc)

        def kkt(bx, bl, bc):
            # [0 G'; G -W'W] [ux; uz] = [bx; b], returned as (ux, W uz)
            sbl, sbc = winv(bl, bc)
            ux = np.zeros(n)
            ul, uc = np.zeros(ml), np.zeros((mc, 3))
            r1, r2l, r2c = bx, sbl, sbc
            for _ in range(3):
                rhs = r1 + prog.rmatvec(*winv(r2l, r2c))
                dx = cho_solve_banded((chol, False), rhs, check_finite=False)
                gl_, gc_ = winv(*prog.matvec(dx))
                ux, ul, uc = ux + dx, ul + gl_ - r2l, uc + gc_ - r2c
                # residual of the scaled system
                r1 = bx - prog.rmatvec(*winv(ul, uc))
                gl_, gc_ = winv(*prog.matvec(ux))
                r2l = sbl - (gl_ - ul)
                r2c = sbc - (gc_ - uc)
            return ux, ul, uc

        x1, sz1_l, sz1_c = kkt(-prog.q, prog.lp_h, prog.cone_h)
        z1_l, z1_c = winv(sz1_l, sz1_c)
        denom = prog.q @ x1 + prog.lp_h @ z1_l + np.sum(prog.cone_h * z1_c) - kappa / tau

        lam_l, lam_c = sc.lam_l, sc.lam_c

        def direction(sigma, ds_l, ds_c, dkap):
            f = 1.0 - sigma
            t_l = ds_l / lam_l
            t_c = _jsolve(lam_c, ds_c)
            bz_l = -f * rz_l - sc.wl * t_l
            bz_c = -f * rz_c - sc.apply_c(t_c)
            x2, sz2_l, sz2_c = kkt(-f * rx, bz_l, bz_c)
            z2_l, z2_c = winv(sz2_l, sz2_c)
            dtau = (
                -f * rt - dkap / tau - prog.q @ x2 - prog.lp_h @ z2_l - np.sum(prog.cone_h * z2_c)
            ) / denom
            dx = x2 + dtau * x1
            wdz_l = sz2_l + dtau * sz1_l
            wdz_c = sz2_c + dtau * sz1_c
            dz_l, dz_c = winv(wdz_l, wdz_c)
            # W^-1 ds = lam \ d_s - W dz
            wds_l = t_l - wdz_l
            wds_c = t_c - wdz_c
            # ds from the primal equation keeps that residual exact even
            # when W is badly conditioned
            gdl, gdc = prog.matvec(dx)
            dsl = -f * rz_l - gdl + dtau * prog.lp_h
            dsc = -f * rz_c - gdc + dtau * prog.cone_h
            dkappa = (dkap - kappa * dtau) / tau
            return dx, dsl, dsc, dz_l, dz_c, dtau, dkappa, (wds_l, wds_c, wdz_l, wdz_c)

        def step_len(dsl, dsc, dzl, dzc, dtau, dkappa):
            a = min(
                _max_step_lp(s_l, dsl),
                _max_step_lp(z_l, dzl),
                _max_step_soc(s_c, dsc),
                _max_step_soc(z_c, dzc),
                _max_step_lp(np.array([tau, kappa]), np.array([dtau, dkappa])),
            )
            return a

        # predictor
        aff = direction(0.0, -lam_l * lam_l, -_jprod(lam_c, lam_c), -tau * kappa)
        a_aff = min(1.0, step_len(*aff[1:7]))
        sigma = min(1.0, max(0.0, (1.0 - a_aff))) ** 3

        # corrector
        wds_l, wds_c, wdz_l, wdz_c = aff[7]
        cor_l = -lam_l * lam_l - wds_l * wdz_l + sigma * mu
        cor_c = -_jprod(lam_c, lam_c) - _jprod(wds_c, wdz_c) + sigma * mu * _E
        cor_k = -tau * kappa - aff[5] * aff[6] + sigma * mu
        dx, dsl, dsc, dzl, dzc, dtau, dkappa, _ = direction(sigma, cor_l, cor_c, cor_k)
        alpha = min(1.0, st.step_fraction * step_len(dsl, dsc, dzl, dzc, dtau, dkappa))
        if not alpha > 1e-14:
            message = "step length collapsed"
            break

        x = x + alpha * dx
        s_l = s_l + alpha * dsl
        s_c = s_c + alpha * dsc
        z_l = z_l + alpha * dzl
        z_c = z_c + alpha * dzc
        tau = tau + alpha * dtau
        kappa = kappa + alpha * dkappa

    if status == INFEASIBLE:
        # report the normalised certificate instead of the (meaningless) iterate
        scale = -(prog.lp_h @ z_l + np.sum(prog.cone_h * z_c))
        z_l, z_c, tau = z_l / scale * tau, z_c / scale * tau, tau
    return IPMResult(
        status=status,
        x=x / tau,
        s_lp=s_l / tau,
        s_cone=s_c / tau,
        z_lp=z_l / tau,
        z_cone=z_c / tau,
        iterations=it,
        pres=float(pres),
        dres=float(dres),
        gap=float(gap),
        message=message,
    )
