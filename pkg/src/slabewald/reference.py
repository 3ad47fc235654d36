"""Independent reference computations used to validate the split solver.

The free-space oracle sums smoothed Coulomb kernels over the doubly
reflected image system of a dielectric slab (no lateral periodicity);
the no-splitting oracle runs the far-field pipeline alone on a grid
fine enough to resolve the bare charges; the work check compares forces
against a centered difference of the energy.
"""

import math
from dataclasses import dataclass

import numpy as np

from .kernels import (self_potential_avg, smoothed_pair_gradient,
                      smoothed_pair_potential, split_widths)
from .params import EwaldParams
from .slab import SlabSolver


def image_family(z_src, H, refl_b, refl_t, n_levels):
    """Image positions/factors for a source at height z_src in the slab.

    Repeated mirror reflections across z = 0 (factor refl_b) and z = H
    (factor refl_t); the source itself is not included.  Returns
    (z_images, strength_factors) with 4*n_levels entries.
    """
    zs, fs = [], []
    for n in range(1, n_levels + 1):
        rr = (refl_b * refl_t) ** n
        zs += [2 * n * H + z_src, -2 * n * H + z_src]
        fs += [rr, rr]
        zs.append(2 * n * H - z_src)
        fs.append(refl_t**n * refl_b ** (n - 1))
        zs.append(-2 * (n - 1) * H - z_src)
        fs.append(refl_b**n * refl_t ** (n - 1))
    return np.asarray(zs), np.asarray(fs)


def free_space_slab_reference(positions, charges, g_w, geometry,
                              n_levels=100):
    """Averaged potential and field per charge from the image series.

    No xy periodicity: this is the open-slab solution the periodic
    solver approaches as Lx = Ly -> infinity.  Convergence of the image
    sums is geometric in refl_b * refl_t.
    """
    pos = np.atleast_2d(positions)
    q = np.atleast_1d(charges)
    n = q.size
    eps = geometry.eps
    refl_b = geometry.image_strength_bottom(1.0)
    refl_t = geometry.image_strength_top(1.0)
    if abs(refl_b * refl_t) >= 1.0:
        raise ValueError("image series does not converge")
    phi = np.zeros(n)
    efield = np.zeros((n, 3))
    for j in range(n):
        zi, fi = image_family(pos[j, 2], geometry.H, refl_b, refl_t, n_levels)
        src_z = np.concatenate([[pos[j, 2]], zi])
        src_q = q[j] * np.concatenate([[1.0], fi])
        d = pos[:, None, :] - np.stack([
            np.full_like(src_z, pos[j, 0]),
            np.full_like(src_z, pos[j, 1]), src_z], axis=1)[None, :, :]
        r = np.sqrt(np.sum(d * d, axis=2))
        gval = smoothed_pair_potential(r, g_w, eps)
        if np.any(r == 0.0):
            gval = np.where(r == 0.0,
                            self_potential_avg(g_w, 0.0, eps), gval)
        phi += gval @ src_q
        grad = smoothed_pair_gradient(r, g_w, eps)
        coef = np.where(r == 0.0, 0.0,
                        -src_q[None, :] * grad / np.where(r == 0, 1.0, r))
        efield += np.einsum('ns,nsa->na', coef, d)
    return phi, efield


def richardson_infinite_box(val_small, l_small, val_big, l_big):
    """Extrapolate to L = infinity assuming an O(1/L) finite-size term."""
    return (l_big * val_big - l_small * val_small) / (l_big - l_small)


def unsplit_params(geometry, g_w, resolve=2.0, n_sigma=6.0,
                   max_points=2**27):
    """Grid parameters for the xi -> infinity (no-splitting) reference.

    The spreading kernel is the bare charge Gaussian, so the grid must
    resolve g_w: spacing g_w / resolve, kernel truncated at n_sigma
    standard deviations, and no near field at all.
    """
    h = g_w / resolve
    nx = max(int(round(geometry.Lx / h)), 4)
    ny = max(int(round(geometry.Ly / h)), 4)
    h_xy = geometry.Lx / nx
    h_e = n_sigma * g_w
    z0, z1 = -3.0 * h_e, geometry.H + 3.0 * h_e
    nz = int(math.ceil(math.pi * (z1 - z0) / (2.0 * h_xy)))
    if nx * ny * nz > max_points:
        raise MemoryError("reference grid %dx%dx%d exceeds the guard"
                          % (nx, ny, nz))
    return EwaldParams(
        xi=np.inf, g_w=g_w, g_t=g_w, delta=0.0,
        n_g=int(math.ceil(2.0 * h_e / h_xy)), n_sigma=n_sigma, h_xy=h_xy,
        H_E=h_e, r_nf=0.0, r_cut=0.0, k_max=math.pi / h_xy,
        Nx=nx, Ny=ny, Nz=nz, z0=z0, z1=z1, h_min=n_sigma * g_w)


def no_split_reference(system, resolve=2.0, n_sigma=6.0, max_points=2**27,
                       threads=1, **solve_kw):
    """Solve without Ewald splitting on a g_w-resolving grid."""
    params = unsplit_params(system.geometry, system.g_w, resolve, n_sigma,
                            max_points)
    return SlabSolver(system, params, threads=threads).solve(**solve_kw)


@dataclass
class WorkCheck:
    W1: float
    W2: float
    reldiff: float
    degenerate: bool = False


def work_check(solver, delta0=1e-4, direction=None, rng=None,
               subtract_self=False):
    """Energy-force consistency along a random unit displacement.

    W1 is the centered finite difference of the energy over a move of
    size delta0 along per-charge unit directions; W2 is the rate of work
    sum F . dX of the computed forces.
    """
    pos = solver.system.positions
    n = pos.shape[0]
    if direction is None:
        rng = np.random.default_rng(rng)
        direction = rng.standard_normal((n, 3))
        direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    res = solver.solve(positions=pos, subtract_self=subtract_self)
    w2 = float(np.sum(res.forces * direction))
    up = solver.solve(positions=pos + 0.5 * delta0 * direction,
                      need_forces=False, subtract_self=subtract_self).U
    dn = solver.solve(positions=pos - 0.5 * delta0 * direction,
                      need_forces=False, subtract_self=subtract_self).U
    w1 = -(up - dn) / delta0
    if abs(w1) < 1e-14:
        return WorkCheck(w1, w2, 0.0, degenerate=True)
    return WorkCheck(w1, w2, abs(w1 - w2) / abs(w1))
