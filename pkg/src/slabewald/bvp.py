"""Spectral-integration solver for the two-point boundary value problems

    y''(z) - k^2 y(z) = f(z)  on [z0, z1],
    y'(z1) + k y(z1) = alpha,   y'(z0) - k y(z0) = beta,

one problem per transverse Fourier mode.  The unknowns are the Chebyshev
coefficients of y'' together with two integration constants (y_0, y'_0);
y' and y follow from the integration recurrences for Chebyshev series.
The resulting system couples coefficient n only to n-2 and n+2, so after
a parity split it is two tridiagonal systems plus a 2x2 Schur complement
for the integration constants.  For k = 0 the mode equations decouple
(y''_n = f_n) and homogeneous Dirichlet conditions close the system.

All routines are vectorized over a batch of modes; the factorization
depends only on k and the grid, so it can be reused across solves.
"""

import numpy as np


def _integration_maps(n):
    """Banded maps from y'' coefficients to y' and y coefficients.

    Returns (e_lo, e_hi, q_lo, q_dg, q_hi) where

      y'_m = e_lo[m] y''_{m-1} + e_hi[m] y''_{m+1}        (m >= 1)
      y_m  = q_lo[m] y''_{m-2} + q_dg[m] y''_m + q_hi[m] y''_{m+2}   (m >= 1)

    with the convention that the zeroth coefficients y_0, y'_0 are free
    constants and coefficients beyond n-1 are truncated to zero.
    """
    e_lo = np.zeros(n)
    e_hi = np.zeros(n)
    q_lo = np.zeros(n)
    q_dg = np.zeros(n)
    q_hi = np.zeros(n)
    if n > 1:
        e_lo[1] = 1.0
        e_hi[1] = -0.5
        q_dg[1] = -0.125
        q_hi[1] = 0.125
    if n > 2:
        e_lo[2] = 0.25
        e_hi[2] = -0.25
        q_lo[2] = 0.25
        q_dg[2] = -1.0 / 6.0
        q_hi[2] = 1.0 / 24.0
    for m in range(3, n):
        e_lo[m] = 0.5 / m
        e_hi[m] = -0.5 / m
        q_lo[m] = 1.0 / (4.0 * m * (m - 1))
        q_dg[m] = -0.5 / (m * m - 1.0)
        q_hi[m] = 1.0 / (4.0 * m * (m + 1))
    return e_lo, e_hi, q_lo, q_dg, q_hi


def _thomas_factor(lo, dg, up):
    """Forward elimination of a batch of tridiagonal matrices.

    ``lo[..., j]`` multiplies x_{j-1} in row j, ``up[..., j]`` multiplies
    x_{j+1}.  Returns (cp, inv_den) for use in :func:`_thomas_solve`.
    """
    n = dg.shape[-1]
    cp = np.zeros_like(dg)
    inv_den = np.zeros_like(dg)
    inv_den[..., 0] = 1.0 / dg[..., 0]
    cp[..., 0] = up[..., 0] * inv_den[..., 0]
    for j in range(1, n):
        den = dg[..., j] - lo[..., j] * cp[..., j - 1]
        inv_den[..., j] = 1.0 / den
        if j < n - 1:
            cp[..., j] = up[..., j] * inv_den[..., j]
    return cp, inv_den


def _thomas_solve(lo, cp, inv_den, rhs):
    """Back/forward substitution for matrices factored by _thomas_factor.

    ``rhs`` has shape (..., n, r); the factor arrays have shape (..., n).
    """
    n = rhs.shape[-2]
    d = np.zeros(rhs.shape, dtype=np.result_type(rhs, inv_den))
    d[..., 0, :] = rhs[..., 0, :] * inv_den[..., 0, None]
    for j in range(1, n):
        d[..., j, :] = (rhs[..., j, :] - lo[..., j, None] * d[..., j - 1, :]) \
            * inv_den[..., j, None]
    x = d
    for j in range(n - 2, -1, -1):
        x[..., j, :] -= cp[..., j, None] * x[..., j + 1, :]
    return x


class BvpPlan:
    """Grid-dependent, k-independent data for the mode BVPs."""

    def __init__(self, nz, z0=-1.0, z1=1.0):
        self.nz = nz
        self.z0 = z0
        self.z1 = z1
        self.half = 0.5 * (z1 - z0)
        e_lo, e_hi, q_lo, q_dg, q_hi = _integration_maps(nz)
        self._e = (e_lo, e_hi)
        self._q = (q_lo, q_dg, q_hi)
        sgn = np.where(np.arange(nz) % 2 == 0, 1.0, -1.0)
        # column sums 1^T E1, 1^T Q, s^T E1, s^T Q of the integration maps
        self.u1 = self._col_sums(np.ones(nz))
        self.v1 = self._col_sums(sgn)
        self.sgn = sgn

    def _col_sums(self, w):
        n = self.nz
        e_lo, e_hi = self._e
        q_lo, q_dg, q_hi = self._q
        ue = np.zeros(n)
        uq = np.zeros(n)
        ue[: n - 1] += w[1:] * e_lo[1:]
        ue[1:] += w[: n - 1] * e_hi[: n - 1]
        uq[: n - 2] += w[2:] * q_lo[2:]
        uq += w * q_dg
        uq[2:] += w[: n - 2] * q_hi[: n - 2]
        return ue, uq

    def apply_q(self, ypp):
        """y coefficients from y'' coefficients (free constants omitted)."""
        q_lo, q_dg, q_hi = self._q
        y = ypp * q_dg
        y[..., 2:] += ypp[..., :-2] * q_lo[2:]
        y[..., :-2] += ypp[..., 2:] * q_hi[:-2]
        y[..., 0] = 0.0
        return y

    def apply_e(self, ypp):
        """y' coefficients from y'' coefficients (free constant omitted)."""
        e_lo, e_hi = self._e
        yp = np.zeros_like(ypp)
        yp[..., 1:] = ypp[..., :-1] * e_lo[1:]
        yp[..., :-1] += ypp[..., 1:] * e_hi[:-1]
        yp[..., 0] = 0.0
        return yp


class BvpFactor:
    """Factorized batch of mode BVPs for one set of wavenumbers."""

    def __init__(self, plan, k):
        self.plan = plan
        self.k = np.atleast_1d(np.asarray(k, dtype=float))
        kap = self.k * plan.half
        self.kappa = kap
        n = plan.nz
        q_lo, q_dg, q_hi = plan._q
        kap2 = kap[:, None] ** 2
        dg = 1.0 - kap2 * q_dg
        lo = -kap2 * np.broadcast_to(q_lo, (kap.size, n))
        up = -kap2 * np.broadcast_to(q_hi, (kap.size, n))
        # parity split: rows/cols 0,2,4,... and 1,3,5,...
        self._fact = []
        for par in (0, 1):
            sl = slice(par, None, 2)
            cp, inv_den = _thomas_factor(lo[:, sl], dg[:, sl], up[:, sl])
            self._fact.append((lo[:, sl], cp, inv_den))
        # A^{-1} B columns; B has -kappa^2 at rows 0 (col 0) and 1 (col 1)
        self._ainvb = []
        for par in (0, 1):
            lo_p, cp, inv_den = self._fact[par]
            rhs = np.zeros(lo_p.shape + (1,))
            rhs[:, 0, 0] = -kap**2
            self._ainvb.append(_thomas_solve(lo_p, cp, inv_den, rhs)[..., 0])
        # BC rows C = [u1 + kappa uQ; v1 - kappa vQ] and block D
        (ue1, uq1), (ve1, vq1) = plan.u1, plan.v1
        self._c_rows = (
            ue1[None, :] + kap[:, None] * uq1[None, :],
            ve1[None, :] - kap[:, None] * vq1[None, :],
        )
        d_blk = np.empty((kap.size, 2, 2))
        d_blk[:, 0, 0] = kap
        d_blk[:, 0, 1] = 1.0 + kap
        d_blk[:, 1, 0] = -kap
        d_blk[:, 1, 1] = 1.0 + kap
        # Schur complement S = C A^{-1} B - D, prefactored as a 2x2 inverse
        s = np.empty_like(d_blk)
        for i, crow in enumerate(self._c_rows):
            for j in range(2):
                aib = self._interleave_col(j)
                s[:, i, j] = np.sum(crow * aib, axis=1)
        s -= d_blk
        det = s[:, 0, 0] * s[:, 1, 1] - s[:, 0, 1] * s[:, 1, 0]
        scale = np.abs(s).sum(axis=(1, 2)) ** 2
        bad = np.abs(det) * 1e12 < scale
        if np.any(bad):
            raise np.linalg.LinAlgError(
                "ill-conditioned Schur block for kappa=%r" % kap[bad][:5])
        inv = np.empty_like(s)
        inv[:, 0, 0] = s[:, 1, 1]
        inv[:, 1, 1] = s[:, 0, 0]
        inv[:, 0, 1] = -s[:, 0, 1]
        inv[:, 1, 0] = -s[:, 1, 0]
        self._s_inv = inv / det[:, None, None]

    def _interleave_col(self, j):
        """Column j of A^{-1} B as a full-length coefficient vector."""
        n = self.plan.nz
        out = np.zeros((self.kappa.size, n))
        out[:, j::2] = self._ainvb[j]
        return out

    def _ainv(self, rhs, idx):
        """Apply A^{-1} to a batch of coefficient vectors (M, nz)."""
        out = np.zeros(rhs.shape, dtype=np.result_type(rhs, 1.0))
        for par in (0, 1):
            lo_p, cp, inv_den = self._fact[par]
            out[:, par::2] = _thomas_solve(
                lo_p[idx], cp[idx], inv_den[idx], rhs[:, par::2, None])[..., 0]
        return out

    def _descend(self, rhs, rhs2, idx):
        """One solve of the block system given right-hand sides."""
        ainv_r = self._ainv(rhs, idx)
        s_rhs = np.empty((rhs.shape[0], 2), dtype=ainv_r.dtype)
        for i, crow in enumerate(self._c_rows):
            s_rhs[:, i] = np.sum(crow[idx] * ainv_r, axis=1)
        s_rhs -= rhs2
        consts = np.einsum('mij,mj->mi', self._s_inv[idx], s_rhs)
        ypp = ainv_r
        for j in range(2):
            ypp[:, j::2] -= self._ainvb[j][idx] * consts[:, j, None]
        return ypp, consts

    def _residual(self, f_sc, bc, ypp, consts, idx):
        """Residual of the block system at (ypp, consts)."""
        plan = self.plan
        kap2 = self.kappa[idx, None] ** 2
        r1 = f_sc - (ypp - kap2 * plan.apply_q(ypp))
        r1[:, 0] += kap2[:, 0] * consts[:, 0]
        r1[:, 1] += kap2[:, 0] * consts[:, 1]
        yq = plan.apply_q(ypp)
        ye = plan.apply_e(ypp)
        kap = self.kappa[idx]
        ones = np.ones(plan.nz)
        c_dot = np.stack([ye @ ones + kap * (yq @ ones),
                          ye @ plan.sgn - kap * (yq @ plan.sgn)], axis=1)
        d_dot = np.stack([
            kap * consts[:, 0] + (1.0 + kap) * consts[:, 1],
            -kap * consts[:, 0] + (1.0 + kap) * consts[:, 1]], axis=1)
        r2 = bc - (c_dot + d_dot)
        return r1, r2

    def solve(self, f_cheb, alpha=0.0, beta=0.0, idx=None, refine=1):
        """Solve the batch given Chebyshev coefficients of f on [z0, z1].

        alpha, beta are the Robin boundary values at z1 and z0; scalars
        broadcast over the batch.  ``idx`` maps batch rows to factor
        rows (default: identity).  One step of iterative refinement
        recovers the digits lost to roundoff at large k (the raw error
        grows like eps k^2).  Returns the Chebyshev coefficients of y.
        """
        plan = self.plan
        f = np.asarray(f_cheb)
        m, n = f.shape[0], plan.nz
        if idx is None:
            idx = np.arange(self.kappa.size)
            if m != idx.size:
                raise ValueError("batch size does not match factor")
        f_sc = f * plan.half**2
        bc = np.empty((m, 2), dtype=np.result_type(f, 1.0))
        bc[:, 0] = np.broadcast_to(np.asarray(alpha), (m,)) * plan.half
        bc[:, 1] = np.broadcast_to(np.asarray(beta), (m,)) * plan.half
        ypp, consts = self._descend(f_sc, bc, idx)
        for _ in range(refine):
            r1, r2 = self._residual(f_sc, bc, ypp, consts, idx)
            dypp, dconsts = self._descend(r1, r2, idx)
            ypp += dypp
            consts += dconsts
        y = plan.apply_q(ypp)
        y[:, 0] += consts[:, 0]
        if n > 1:
            y[:, 1] += consts[:, 1]
        return y


def solve_k0_dirichlet(plan, f_cheb):
    """k = 0 mode: y'' = f with homogeneous Dirichlet conditions.

    ``f_cheb`` holds Chebyshev coefficients of f on the plan's interval,
    batched over leading axes.
    """
    ypp = np.asarray(f_cheb) * plan.half**2
    y = plan.apply_q(ypp)
    p = np.sum(y, axis=-1)
    q = np.sum(y * plan.sgn, axis=-1)
    c0 = -0.5 * (p + q)
    c1 = 0.5 * (q - p)
    y[..., 0] += c0
    if plan.nz > 1:
        y[..., 1] += c1
    return y


def bvp_solve(k, f_cheb, z0=-1.0, z1=1.0, alpha=0.0, beta=0.0, plan=None):
    """Convenience single-mode solve; see :class:`BvpFactor`.

    For k = 0 the Robin data is ignored and the homogeneous Dirichlet
    closure is used instead.
    """
    f = np.asarray(f_cheb)
    if plan is None:
        plan = BvpPlan(f.shape[-1], z0, z1)
    if k == 0:
        return solve_k0_dirichlet(plan, f)
    fact = BvpFactor(plan, np.array([float(k)]))
    return fact.solve(f[None, :], alpha, beta)[0]


def solve_dense(k, f_cheb, z0=-1.0, z1=1.0, alpha=0.0, beta=0.0):
    """Dense row-equilibrated assembly of the same system; reference path."""
    f = np.asarray(f_cheb)
    n = f.shape[-1]
    plan = BvpPlan(n, z0, z1)
    half = plan.half
    kap = k * half
    eye = np.eye(n)
    q_mat = plan.apply_q(eye).T
    e_mat = plan.apply_e(eye).T
    a_blk = np.eye(n) - kap**2 * q_mat
    b_blk = np.zeros((n, 2))
    b_blk[0, 0] = -kap**2
    if n > 1:
        b_blk[1, 1] = -kap**2
    ones = np.ones(n)
    c_blk = np.vstack([
        ones @ e_mat + kap * (ones @ q_mat),
        plan.sgn @ e_mat - kap * (plan.sgn @ q_mat),
    ])
    d_blk = np.array([[kap, 1.0 + kap], [-kap, 1.0 + kap]])
    full = np.block([[a_blk, b_blk], [c_blk, d_blk]])
    rhs = np.concatenate([f * half**2, [alpha * half, beta * half]])
    scale = np.abs(full).max(axis=1)
    sol = np.linalg.solve(full / scale[:, None], rhs / scale)
    ypp, consts = sol[:n], sol[n:]
    y = plan.apply_q(ypp)
    y[0] += consts[0]
    if n > 1:
        y[1] += consts[1]
    return y
