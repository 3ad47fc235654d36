"""Smooth doubly periodic Poisson solves and the harmonic correction.

The free-space-in-z problem eps lap(phi) = -f is reduced per transverse
Fourier mode to a two-point BVP on the extended Chebyshev interval with
Robin (Dirichlet-to-Neumann) conditions encoding exponential decay; the
k = 0 mode is fixed only up to a linear function and solved with a
homogeneous Dirichlet closure.  Jumps in permittivity and wall-bound
charge enter through a piecewise-harmonic correction field whose
coefficients follow analytically from the boundary mismatches; the
evaluation is arranged so every exponential has a nonpositive exponent
inside the slab and is carried out in extended precision.
"""

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from .bvp import BvpFactor, BvpPlan, solve_k0_dirichlet
from .chebyshev import fourier_wavenumbers

_CHUNK_MODES = 32768


class DtnSolver:
    """Batched mode BVP solves for one grid; factorizations are cached.

    Solves eps lap(psi) = -rho with decay conditions in z, given and
    returning Fourier-Chebyshev coefficient tensors of shape
    (nx, ny, nz).
    """

    def __init__(self, nx, ny, nz, Lx, Ly, z0, z1, eps):
        self.eps = float(eps)
        self.plan = BvpPlan(nz, z0, z1)
        kx, ky = fourier_wavenumbers(nx, ny, Lx, Ly)
        self.kx, self.ky = kx, ky
        self.kmag = np.hypot(kx[:, None], ky[None, :])
        flat = self.kmag.ravel()
        self._nonzero = flat > 0.0
        uniq, inverse = np.unique(flat[self._nonzero], return_inverse=True)
        self._factor = BvpFactor(self.plan, uniq)
        self._inverse = inverse
        self.shape = (nx, ny, nz)

    def solve(self, rho_cheb, refine=1):
        """Potential coefficients from charge-density coefficients.

        ``rho_cheb`` may carry a leading stack axis; all right-hand
        sides go through each factorization sweep together.
        """
        stacked = rho_cheb.ndim == 4
        rhos = rho_cheb if stacked else rho_cheb[None]
        nx, ny, nz = self.shape
        ns = rhos.shape[0]
        f = -rhos.reshape(ns, nx * ny, nz) / self.eps
        out = np.zeros_like(f)
        # k = 0: double integral fixed by homogeneous Dirichlet data
        out[:, 0] = solve_k0_dirichlet(self.plan, f[:, 0])
        sel = np.flatnonzero(self._nonzero)
        chunk = max(_CHUNK_MODES // ns, 1)
        for a in range(0, sel.size, chunk):
            rows = sel[a:a + chunk]
            fidx = self._inverse[a:a + chunk]
            batch = f[:, rows].reshape(ns * rows.size, nz)
            y = self._factor.solve(batch, idx=np.tile(fidx, ns),
                                   refine=refine)
            out[:, rows] = y.reshape(ns, rows.size, nz)
        out = out.reshape(ns, nx, ny, nz)
        return out if stacked else out[0]


@dataclass
class Mismatch:
    """Boundary mismatches of the intermediate potentials (xy modes)."""

    phi_b: np.ndarray
    e_b: np.ndarray
    phi_t: np.ndarray
    e_t: np.ndarray

    def require_finite(self):
        for name in ("phi_b", "e_b", "phi_t", "e_t"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise FloatingPointError("non-finite mismatch field " + name)


class HarmonicCorrection:
    """Analytic slab-interior Laplace solution from boundary mismatches.

    The response to (M_b, M_t), where M_b = (m_E_b - eps_b k m_phi_b)/eps
    and M_t = (eps_t k m_phi_t + m_E_t)/eps, is a combination of four
    exponentials arranged so every exponent is nonpositive inside the
    slab, with denominator k [(1+eps_b/eps)(1+eps_t/eps)
    - (1-eps_b/eps)(1-eps_t/eps) exp(-2kH)].  The k- and z-dependent
    response tables are precomputed in extended precision; modes with
    k = 0 or k > k_max and nodes outside the window are zero.
    """

    def __init__(self, eps, eps_b, eps_t, H, kmag, z_nodes, z_lo, z_hi,
                 k_max):
        self.shape = kmag.shape + (z_nodes.size,)
        self.eps = float(eps)
        self.eps_b, self.eps_t = float(eps_b), float(eps_t)
        self.sel = (kmag > 0.0) & (kmag <= k_max)
        self.win = (z_nodes >= z_lo) & (z_nodes <= z_hi)
        if not (np.any(self.sel) and np.any(self.win)):
            self.sel = np.zeros_like(self.sel)
            return
        ld = np.longdouble
        k = kmag[self.sel].astype(ld)[:, None]
        self.kmag_sel = kmag[self.sel]
        z = z_nodes[self.win].astype(ld)[None, :]
        ebr = ld(eps_b) / ld(eps)
        etr = ld(eps_t) / ld(eps)
        Hl = ld(H)
        den = k * ((1 + ebr) * (1 + etr)
                   - (1 - ebr) * (1 - etr) * np.exp(-2 * k * Hl))
        e1 = np.exp(-k * z)
        e2 = np.exp(k * (z - Hl))
        e3 = np.exp(-k * (Hl + z))
        e4 = np.exp(k * (z - 2 * Hl))
        self.p_b = (((etr + 1) * e1 - (etr - 1) * e4) / den).astype(complex)
        self.p_t = ((-(ebr + 1) * e2 + (ebr - 1) * e3) / den).astype(complex)
        self.d_b = (-k * ((etr + 1) * e1 + (etr - 1) * e4) / den
                    ).astype(complex)
        self.d_t = (-k * ((ebr + 1) * e2 + (ebr - 1) * e3) / den
                    ).astype(complex)

    def moments(self, mismatch):
        """(M_b, M_t) on the selected modes."""
        k = self.kmag_sel
        m_b = (mismatch.e_b[self.sel]
               - self.eps_b * k * mismatch.phi_b[self.sel]) / self.eps
        m_t = (self.eps_t * k * mismatch.phi_t[self.sel]
               + mismatch.e_t[self.sel]) / self.eps
        return m_b, m_t

    def apply(self, mismatch):
        """Correction values and z derivatives as (nx, ny, nz) modes."""
        mismatch.require_finite()
        val = np.zeros(self.shape, dtype=np.complex128)
        dval = np.zeros_like(val)
        if not np.any(self.sel):
            return val, dval
        m_b, m_t = self.moments(mismatch)
        tmp = np.zeros((int(self.sel.sum()), self.shape[2]),
                       dtype=np.complex128)
        tmp[:, self.win] = self.p_b * m_b[:, None] + self.p_t * m_t[:, None]
        val[self.sel] = tmp
        tmp = np.zeros_like(tmp)
        tmp[:, self.win] = self.d_b * m_b[:, None] + self.d_t * m_t[:, None]
        dval[self.sel] = tmp
        return val, dval


def harmonic_interior(mismatch, eps, eps_b, eps_t, H, kmag, z_nodes,
                      z_lo, z_hi, k_max):
    """One-shot wrapper around :class:`HarmonicCorrection`."""
    hc = HarmonicCorrection(eps, eps_b, eps_t, H, kmag, z_nodes, z_lo, z_hi,
                            k_max)
    return hc.apply(mismatch)


@dataclass
class K0Coefficients:
    """Linear modes of the k = 0 component across the three regions."""

    A_i: float
    A_b: float
    A_t: float
    ai1: float
    ai2: float
    discrepancy: float
    psi_i_bottom: float
    psi_i_top: float
    psi_b_bottom: float
    psi_t_top: float

    def offsets_given_Bi(self, B_i, H):
        """Exterior constants (B_b, B_t) once B_i fixes the gauge."""
        B_b = self.psi_i_bottom + B_i - self.psi_b_bottom
        B_t = (self.psi_i_top - self.psi_t_top
               + (self.A_i - self.A_t) * H + B_i)
        return B_b, B_t


def combine_k0(wall_data, sigma0_b, sigma0_t, eps, eps_b, eps_t,
               scale=1.0, warn_tol=1e-3, fail_tol=1e-2):
    """Linear k = 0 modes from decay and jump conditions.

    ``wall_data`` provides the k = 0 intermediate-potential values and z
    derivatives: a mapping with keys psi_i(0), psi_i(H), dpsi_i(0),
    dpsi_i(H), psi_b(0), dpsi_b(0), dpsi_b(z0), psi_t(H), dpsi_t(H),
    dpsi_t(z1).  The A_i mode is computed from both displacement
    conditions and averaged; their relative discrepancy (against
    ``scale``) is a resolution/electroneutrality diagnostic.
    """
    A_b = -wall_data["dpsi_b(z0)"]
    A_t = -wall_data["dpsi_t(z1)"]
    ai1 = (eps_b * (wall_data["dpsi_b(0)"] + A_b)
           - eps * wall_data["dpsi_i(0)"] - sigma0_b) / eps
    ai2 = (eps_t * (wall_data["dpsi_t(H)"] + A_t)
           - eps * wall_data["dpsi_i(H)"] + sigma0_t) / eps
    ref = max(abs(ai1), abs(ai2), abs(scale))
    disc = abs(ai1 - ai2) / ref if ref > 0 else 0.0
    if disc > fail_tol:
        raise FloatingPointError(
            "k=0 coefficient mismatch %.2e: system not electroneutral or "
            "under-resolved" % disc)
    if disc > warn_tol:
        warnings.warn("k=0 coefficient mismatch %.2e" % disc)
    return K0Coefficients(
        A_i=0.5 * (ai1 + ai2), A_b=A_b, A_t=A_t, ai1=ai1, ai2=ai2,
        discrepancy=disc,
        psi_i_bottom=wall_data["psi_i(0)"], psi_i_top=wall_data["psi_i(H)"],
        psi_b_bottom=wall_data["psi_b(0)"], psi_t_top=wall_data["psi_t(H)"])


def solve_triply_periodic(rho, eps, Lx, Ly, Lz, with_field=False, workers=1):
    """FFT Poisson solve eps lap(phi) = -rho on a periodic box.

    The k = 0 mode of the potential is set to zero (electroneutral
    convention).  With ``with_field`` also returns E = -grad phi as a
    (3, nx, ny, nz) array.
    """
    nx, ny, nz = rho.shape
    rho_hat = sfft.fftn(rho, workers=workers)
    kx, ky = fourier_wavenumbers(nx, ny, Lx, Ly)
    kz = 2.0 * np.pi * sfft.fftfreq(nz, d=1.0 / nz) / Lz
    k2 = (kx[:, None, None] ** 2 + ky[None, :, None] ** 2
          + kz[None, None, :] ** 2)
    k2[0, 0, 0] = 1.0
    phi_hat = rho_hat / (eps * k2)
    phi_hat[0, 0, 0] = 0.0
    phi = sfft.ifftn(phi_hat, workers=workers).real
    if not with_field:
        return phi
    e = np.empty((3,) + rho.shape)
    for ax, kvec in enumerate((kx, ky, kz)):
        shp = [1, 1, 1]
        shp[ax] = kvec.size
        kv = kvec.reshape(shp).copy()
        n = rho.shape[ax]
        if n % 2 == 0:
            kv[kv == np.min(kv)] = 0.0  # drop unmatched Nyquist derivative
        e[ax] = sfft.ifftn(-1j * kv * phi_hat, workers=workers).real
    return phi, e
