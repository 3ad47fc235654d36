"""Split solver for Gaussian charges between dielectric slab walls.

The averaged potential and field on each charge are computed as a
near-field pairwise sum (screened erf kernels over neighbors and one
image layer per wall) plus a far-field grid solve: smeared charges and
near-wall images spread onto a Fourier-Chebyshev grid, two
Dirichlet-to-Neumann Poisson solves, an analytic harmonic correction
for the remaining (infinite) image system and wall charge, and a k = 0
linear-mode match.  Energies include the wall-charge surface integral;
forces are q times the averaged field.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft
from scipy.spatial import cKDTree

from . import kernels
from .chebyshev import cheb_derivative, cheb_eval, cheb_inverse, \
    cheb_transform
from .dpsolver import DtnSolver, HarmonicCorrection, K0Coefficients, \
    Mismatch, combine_k0
from .gridops import FourierChebGrid


@dataclass
class ChargePartition:
    """Near-wall charges, mid-slab charges, and first-layer images."""

    over: np.ndarray
    far: np.ndarray
    image_positions: np.ndarray
    image_strengths: np.ndarray
    image_source: np.ndarray
    image_wall: np.ndarray


@dataclass
class SolveResult:
    phi_bar: np.ndarray
    E_bar: np.ndarray
    U: float
    diagnostics: dict = field(default_factory=dict)

    @property
    def forces(self):
        return self.diagnostics["charges"][:, None] * self.E_bar


def build_partition(positions, charges, geometry, params):
    """Split charges by wall distance and build their first images.

    Charges within 2 H_E of a wall get an image across that wall with
    the dielectric reflection strength; zero-strength images are
    dropped.  A charge close to both walls (thin slab) gets two.
    """
    z = positions[:, 2]
    near_b = z < 2.0 * params.H_E
    near_t = z > geometry.H - 2.0 * params.H_E
    over = np.flatnonzero(near_b | near_t)
    far = np.flatnonzero(~(near_b | near_t))
    ipos, istr, isrc, iwall = [], [], [], []
    fb = geometry.image_strength_bottom(1.0)
    ft = geometry.image_strength_top(1.0)
    for idx in over:
        if near_b[idx] and fb != 0.0:
            ipos.append([positions[idx, 0], positions[idx, 1],
                         -positions[idx, 2]])
            istr.append(fb * charges[idx])
            isrc.append(idx)
            iwall.append(0)
        if near_t[idx] and ft != 0.0:
            ipos.append([positions[idx, 0], positions[idx, 1],
                         2.0 * geometry.H - positions[idx, 2]])
            istr.append(ft * charges[idx])
            isrc.append(idx)
            iwall.append(1)
    ipos = np.asarray(ipos, dtype=float).reshape(-1, 3)
    return ChargePartition(over, far, ipos, np.asarray(istr, dtype=float),
                           np.asarray(isrc, dtype=int),
                           np.asarray(iwall, dtype=int))


class NearField:
    """Pairwise screened sums against one set of sources.

    Sources are the charges plus one image layer per wall; evaluation
    points see the xy minimum image (the z direction never wraps thanks
    to a padded virtual box).  One instance serves the charge, origin
    and wall-node evaluations of a solve.
    """

    def __init__(self, positions, charges, geometry, params):
        self.geometry = geometry
        self.params = params
        self.n_charges = positions.shape[0]
        self.empty = positions.shape[0] == 0 or np.isinf(params.xi)
        if self.empty:
            return
        if params.r_cut >= 0.5 * min(geometry.Lx, geometry.Ly):
            raise ValueError(
                "near-field cutoff exceeds half the periodic box")
        srcs = [positions]
        qs = [charges]
        fb = geometry.image_strength_bottom(1.0)
        ft = geometry.image_strength_top(1.0)
        if fb != 0.0:
            mirror = positions.copy()
            mirror[:, 2] *= -1.0
            srcs.append(mirror)
            qs.append(fb * charges)
        if ft != 0.0:
            mirror = positions.copy()
            mirror[:, 2] = 2.0 * geometry.H - mirror[:, 2]
            srcs.append(mirror)
            qs.append(ft * charges)
        self.src_pos = np.concatenate(srcs, axis=0)
        self.src_q = np.concatenate(qs)
        self._zmin = self.src_pos[:, 2].min() - params.r_cut - 1.0
        self._lz = (self.src_pos[:, 2].max() - self._zmin) \
            + 2.0 * params.r_cut + 2.0
        self._box = np.array([geometry.Lx, geometry.Ly, self._lz])
        self.tree = cKDTree(self._shift(self.src_pos), boxsize=self._box)

    def _shift(self, p):
        out = np.empty_like(p)
        out[:, 0] = np.mod(p[:, 0], self.geometry.Lx)
        out[:, 1] = np.mod(p[:, 1], self.geometry.Ly)
        out[:, 2] = p[:, 2] - self._zmin
        return out

    def _pairs(self, eval_pos, r_query):
        lists = self.tree.query_ball_point(self._shift(eval_pos), r=r_query)
        counts = np.fromiter((len(l) for l in lists), dtype=np.int64,
                             count=len(lists))
        if counts.sum() == 0:
            empty = np.zeros(0, dtype=np.int64)
            return empty, empty, np.zeros((0, 3)), np.zeros(0)
        sidx = np.concatenate([np.asarray(l, dtype=np.int64)
                               for l in lists if l])
        eidx = np.repeat(np.arange(eval_pos.shape[0]), counts)
        d = eval_pos[eidx] - self.src_pos[sidx]
        d[:, 0] -= self.geometry.Lx * np.round(d[:, 0] / self.geometry.Lx)
        d[:, 1] -= self.geometry.Ly * np.round(d[:, 1] / self.geometry.Ly)
        r = np.sqrt(np.sum(d * d, axis=1))
        keep = r <= r_query
        return eidx[keep], sidx[keep], d[keep], r[keep]

    def evaluate(self, eval_pos, kernel="avg", need_field=True,
                 subtract_unsplit_self=False):
        ne = eval_pos.shape[0]
        phi = np.zeros(ne)
        efield = np.zeros((ne, 3))
        if self.empty:
            return (phi, efield) if need_field else phi
        par, eps = self.params, self.geometry.eps
        g_w, xi = par.g_w, par.xi
        r_query = par.r_cut if kernel == "avg" else par.r_nf
        eidx, sidx, d, r = self._pairs(eval_pos, r_query)
        zero = r == 0.0
        if kernel == "avg":
            gval = kernels.near_potential_avg(r, g_w, xi, eps)
            gval = np.where(zero, kernels.self_potential_avg(
                g_w, xi, eps, subtract_unsplit=subtract_unsplit_self), gval)
            grad = kernels.near_gradient_avg(r, g_w, xi, eps)
        else:
            gval = np.where(
                zero, kernels.near_potential_point(0.0, g_w, xi, eps),
                kernels.near_potential_point(r, g_w, xi, eps))
            grad = kernels.near_gradient_point(r, g_w, xi, eps)
        phi = np.bincount(eidx, weights=self.src_q[sidx] * gval,
                          minlength=ne)
        if not need_field:
            return phi
        coef = np.where(zero, 0.0, -self.src_q[sidx] * grad
                        / np.where(zero, 1.0, r))
        for ax in range(3):
            efield[:, ax] = np.bincount(eidx, weights=coef * d[:, ax],
                                        minlength=ne)
        return phi, efield


def near_field_sum(positions, charges, geometry, params, eval_positions=None,
                   kernel="avg", need_field=True,
                   subtract_unsplit_self=False):
    """One-shot near-field sums; see :class:`NearField`."""
    nf = NearField(positions, charges, geometry, params)
    pts = positions if eval_positions is None else \
        np.atleast_2d(eval_positions)
    return nf.evaluate(pts, kernel, need_field, subtract_unsplit_self)


class SlabSolver:
    """Reusable solver: grids, factorizations and wall data precomputed."""

    def __init__(self, system, params, threads=1, refine=1):
        self.system = system
        self.params = params
        self.threads = threads
        self.refine = refine
        geo = system.geometry
        self.grid = FourierChebGrid.from_params(geo, params)
        self.dtn = DtnSolver(params.Nx, params.Ny, params.Nz, geo.Lx, geo.Ly,
                             params.z0, params.z1, geo.eps)
        self.correction = HarmonicCorrection(
            geo.eps, geo.eps_b, geo.eps_t, geo.H, self.dtn.kmag, self.grid.z,
            -params.H_E, geo.H + params.H_E, params.k_max)
        self.sigma_b, self.sigma_t = system.surface.sample(
            geo, params.Nx, params.Ny)
        nxy = params.Nx * params.Ny
        self.sigma_b_hat = sfft.fft2(self.sigma_b) / nxy
        self.sigma_t_hat = sfft.fft2(self.sigma_t) / nxy
        # spectral evaluation data at the walls and extended ends
        nz = params.Nz
        n = np.arange(nz)
        self._t_wall = {}
        for z in (0.0, geo.H):
            theta = np.arccos(np.clip(
                2.0 * (z - params.z0) / (params.z1 - params.z0) - 1.0,
                -1.0, 1.0))
            self._t_wall[z] = np.cos(n * theta)
        kx, ky = self.dtn.kx, self.dtn.ky
        ikx = 1j * kx
        iky = 1j * ky
        if params.Nx % 2 == 0:
            ikx[params.Nx // 2] = 0.0
        if params.Ny % 2 == 0:
            iky[params.Ny // 2] = 0.0
        self._ikx, self._iky = ikx, iky
        qscale = np.abs(system.charges).sum() / geo.area
        sscale = (np.abs(self.sigma_b).mean() + np.abs(self.sigma_t).mean())
        self._k0_scale = (qscale + sscale) / geo.eps

    # -- helpers -------------------------------------------------------
    def _spread(self, pos, q):
        return self.grid.spread(pos, q, self.params.g_t, self.params.H_E,
                                self.params.H_E)

    def _forward(self, rho):
        nxy = self.params.Nx * self.params.Ny
        rho_hat = sfft.fft2(rho, axes=(0, 1), workers=self.threads) / nxy
        return cheb_transform(rho_hat, axis=2, workers=self.threads)

    def _wall_value(self, coeffs, z):
        return np.tensordot(coeffs, self._t_wall[z], axes=([2], [0]))

    def _modes_to_grid(self, modes):
        nxy = self.params.Nx * self.params.Ny
        return sfft.ifft2(modes * nxy, axes=(0, 1),
                          workers=self.threads).real

    def _interp_gamma(self, fields, points):
        width = self.params.screen_width
        radius = (self.params.H_E / self.params.g_t) * width
        return self.grid.interpolate(fields, points, width, radius, radius)

    # -- main entry ----------------------------------------------------
    def solve(self, positions=None, need_energy=True, need_forces=True,
              need_potential=True, subtract_self=False,
              include_correction=True, force_general=False):
        """Averaged potential and field at every charge, and the energy.

        ``positions`` overrides the system's charge positions (same
        charges), letting one solver instance serve Brownian dynamics
        and finite-difference checks without replanning.  Disabling
        ``need_potential`` skips the phi(0) = 0 gauge evaluation (the
        energy is gauge independent for electroneutral systems).
        """
        geo = self.system.geometry
        par = self.params
        pos = self.system.positions if positions is None else \
            np.atleast_2d(np.asarray(positions, dtype=float))
        q = self.system.charges
        diag = {"charges": q}
        jumps = (geo.eps_b != geo.eps or geo.eps_t != geo.eps
                 or force_general)

        # far field: spread onto the grid, then DtN solves
        if include_correction and jumps:
            part = build_partition(pos, q, geo, par)
            rho_over = self._spread(pos[part.over], q[part.over])
            extra_pos = [pos[part.far]]
            extra_q = [q[part.far]]
            if part.image_positions.shape[0]:
                extra_pos.append(part.image_positions)
                extra_q.append(part.image_strengths)
            rho_in = rho_over + self._spread(np.concatenate(extra_pos),
                                             np.concatenate(extra_q))
            both = self.dtn.solve(np.stack([
                self._forward(rho_over), self._forward(rho_in)]),
                refine=self.refine)
            psi_o, psi_i = both[0], both[1]
            del rho_over, rho_in, both
        else:
            psi_o = None
            psi_i = self.dtn.solve(self._forward(self._spread(pos, q)),
                                   refine=self.refine)
        dpsi_i = cheb_derivative(psi_i, par.z0, par.z1, axis=2)

        # boundary mismatches and harmonic correction (k != 0)
        if include_correction and jumps:
            dpsi_o = cheb_derivative(psi_o, par.z0, par.z1, axis=2)
            cb = geo.exterior_factor_bottom()
            ct = geo.exterior_factor_top()
            mism = Mismatch(
                phi_b=self._wall_value(psi_i, 0.0)
                - cb * self._wall_value(psi_o, 0.0),
                e_b=geo.eps * self._wall_value(dpsi_i, 0.0)
                - geo.eps_b * cb * self._wall_value(dpsi_o, 0.0)
                + self.sigma_b_hat,
                phi_t=self._wall_value(psi_i, geo.H)
                - ct * self._wall_value(psi_o, geo.H),
                e_t=geo.eps * self._wall_value(dpsi_i, geo.H)
                - geo.eps_t * ct * self._wall_value(dpsi_o, geo.H)
                - self.sigma_t_hat)
            corr, dcorr = self.correction.apply(mism)
            k0 = self._combine_k0(psi_i, dpsi_i, psi_o, dpsi_o, cb, ct)
            del psi_o, dpsi_o
        elif include_correction:
            # uniform permittivity: no images; only wall charge corrects
            zero = np.zeros_like(self.sigma_b_hat)
            mism = Mismatch(phi_b=zero, e_b=self.sigma_b_hat,
                            phi_t=zero, e_t=-self.sigma_t_hat)
            corr, dcorr = self.correction.apply(mism)
            k0 = self._combine_k0_plain(psi_i, dpsi_i,
                                        self.sigma_b_hat[0, 0].real,
                                        self.sigma_t_hat[0, 0].real)
        else:
            corr = dcorr = None
            k0 = self._combine_k0_plain(psi_i, dpsi_i)
        diag.update(ai1=k0.ai1, ai2=k0.ai2, ai_discrepancy=k0.discrepancy)

        # grid values of psi and -grad psi
        zvals = self.grid.z
        vals_modes = cheb_inverse(psi_i, axis=2, workers=self.threads)
        if corr is not None:
            vals_modes += corr
            del corr
        psi_vals = self._modes_to_grid(vals_modes) \
            + k0.A_i * zvals[None, None, :]
        fields = [psi_vals]
        if need_forces:
            dz_modes = cheb_inverse(dpsi_i, axis=2, workers=self.threads)
            if dcorr is not None:
                dz_modes += dcorr
                del dcorr
            fields.append(-self._modes_to_grid(
                vals_modes * self._ikx[:, None, None]))
            fields.append(-self._modes_to_grid(
                vals_modes * self._iky[None, :, None]))
            fields.append(-(self._modes_to_grid(dz_modes) + k0.A_i))
            del dz_modes
        del vals_modes, psi_i, dpsi_i
        stack = np.stack(fields)
        del fields

        # averaged far field at the charges, then the near field
        interp = self.grid.interpolate(stack, pos, par.g_t, par.H_E, par.H_E)
        phi_far = interp[0]
        nf = NearField(pos, q, geo, par)
        if need_forces:
            e_far = interp[1:4].T
            phi_near, e_near = nf.evaluate(
                pos, kernel="avg", subtract_unsplit_self=subtract_self)
            e_bar = e_far + e_near
        else:
            phi_near = nf.evaluate(pos, kernel="avg", need_field=False,
                                   subtract_unsplit_self=subtract_self)
            e_bar = np.zeros((pos.shape[0], 3))
        if subtract_self and np.isinf(par.xi):
            phi_near = phi_near + q * kernels.self_potential_avg(
                par.g_w, np.inf, geo.eps, subtract_unsplit=True)
        phi_bar = phi_far + phi_near

        # gauge: pointwise potential vanishes at the origin
        b_i = 0.0
        if need_potential and not np.isinf(par.xi):
            origin = np.zeros((1, 3))
            far0 = self._interp_gamma(psi_vals, origin)[0]
            near0 = nf.evaluate(origin, kernel="point", need_field=False)[0]
            b_i = -(far0 + near0)
            phi_bar = phi_bar + b_i
        diag["B_i"] = b_i
        diag["k0"] = k0

        energy = 0.0
        if need_energy:
            energy = 0.5 * float(np.dot(q, phi_bar))
            if not self.system.surface.is_zero:
                energy += self._wall_energy(nf, psi_vals, b_i)
        diag["constraints"] = par.constraints
        return SolveResult(phi_bar=phi_bar, E_bar=e_bar, U=energy,
                           diagnostics=diag)

    # -- k = 0 handling ------------------------------------------------
    def _k0_profile(self, coeffs):
        return coeffs[0, 0, :].real

    def _combine_k0(self, psi_i, dpsi_i, psi_o, dpsi_o, cb, ct):
        geo = self.system.geometry
        par = self.params
        pi0 = self._k0_profile(psi_i)
        dpi0 = self._k0_profile(dpsi_i)
        po0 = self._k0_profile(psi_o)
        dpo0 = self._k0_profile(dpsi_o)

        def ev(c, z):
            return float(cheb_eval(c, z, par.z0, par.z1))

        sgn, ones = self.dtn.plan.sgn, np.ones(par.Nz)
        wall = {
            "psi_i(0)": ev(pi0, 0.0), "psi_i(H)": ev(pi0, geo.H),
            "dpsi_i(0)": ev(dpi0, 0.0), "dpsi_i(H)": ev(dpi0, geo.H),
            "psi_b(0)": cb * ev(po0, 0.0), "dpsi_b(0)": cb * ev(dpo0, 0.0),
            "dpsi_b(z0)": cb * float(dpo0 @ sgn),
            "psi_t(H)": ct * ev(po0, geo.H),
            "dpsi_t(H)": ct * ev(dpo0, geo.H),
            "dpsi_t(z1)": ct * float(dpo0 @ ones),
        }
        return combine_k0(wall, self.sigma_b_hat[0, 0].real,
                          self.sigma_t_hat[0, 0].real,
                          geo.eps, geo.eps_b, geo.eps_t,
                          scale=self._k0_scale)

    def _combine_k0_plain(self, psi_i, dpsi_i, sigma0_b=0.0, sigma0_t=0.0):
        """No-jump path: the linear mode comes from decay at the ends."""
        par = self.params
        geo = self.system.geometry
        dpi0 = self._k0_profile(dpsi_i)
        sgn, ones = self.dtn.plan.sgn, np.ones(par.Nz)
        ai1 = -float(dpi0 @ sgn) - sigma0_b / geo.eps
        ai2 = -float(dpi0 @ ones) + sigma0_t / geo.eps
        ref = max(abs(ai1), abs(ai2), self._k0_scale)
        disc = abs(ai1 - ai2) / ref if ref > 0 else 0.0
        pi0 = self._k0_profile(psi_i)

        def ev(c, z):
            return float(cheb_eval(c, z, par.z0, par.z1))

        return K0Coefficients(
            A_i=0.5 * (ai1 + ai2), A_b=ai1, A_t=ai2, ai1=ai1, ai2=ai2,
            discrepancy=disc, psi_i_bottom=ev(pi0, 0.0),
            psi_i_top=ev(pi0, geo.H), psi_b_bottom=ev(pi0, 0.0),
            psi_t_top=ev(pi0, geo.H))

    # -- energy of the wall-bound charge -------------------------------
    def _wall_energy(self, nf, psi_vals, b_i):
        geo = self.system.geometry
        xs, ys = self.grid.x, self.grid.y
        xg, yg = np.meshgrid(xs, ys, indexing="ij")
        total = 0.0
        for sigma, z in ((self.sigma_b, 0.0), (self.sigma_t, geo.H)):
            pts = np.column_stack([xg.ravel(), yg.ravel(),
                                   np.full(xg.size, z)])
            far = self._interp_gamma(psi_vals, pts)
            near = nf.evaluate(pts, kernel="point", need_field=False)
            phi_wall = far + near + b_i
            total += 0.5 * self.grid.hx * self.grid.hy * float(
                sigma.ravel() @ phi_wall)
        return total


def solve_system(system, params, **kw):
    """One-shot convenience wrapper around :class:`SlabSolver`."""
    return SlabSolver(system, params).solve(**kw)
