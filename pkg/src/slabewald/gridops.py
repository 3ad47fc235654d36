"""Spreading charges to grids and averaging fields back.

Both directions use the same truncated Gaussian stencil: uniform
periodic cells in x and y, and either Chebyshev (slab) or uniform
periodic (triply periodic) nodes in z.  Spreading and interpolation
share the kernel evaluation, so the quadrature-weighted adjoint
identity holds to the last bit.  Charges are processed in fixed-size
chunks in input order, which makes the accumulated grid deterministic.
"""

import numpy as np

from .chebyshev import cheb_nodes, clenshaw_curtis_weights

_CHUNK = 256


def _axis_stencil_uniform(pos, h, n, radius):
    """Periodic uniform-axis stencil: indices, offsets and in-range mask."""
    m = int(np.floor(radius / h + 1e-12))
    offs = np.arange(-m, m + 1)
    j0 = np.floor(pos / h).astype(np.int64)
    idx = (j0[:, None] + offs[None, :]) % n
    delta = pos[:, None] - (j0[:, None] + offs[None, :]) * h
    keep = np.abs(delta) <= radius + 1e-12 * radius
    return idx, delta, keep


def _axis_stencil_cheb(pos, nodes, radius):
    """Nonuniform-axis stencil via bisection into the sorted node list."""
    lo = np.searchsorted(nodes, pos - radius, side="left")
    hi = np.searchsorted(nodes, pos + radius, side="right")
    width = int(np.max(hi - lo)) if pos.size else 0
    offs = np.arange(max(width, 1))
    idx = np.minimum(lo[:, None] + offs[None, :], nodes.size - 1)
    delta = pos[:, None] - nodes[idx]
    keep = (lo[:, None] + offs[None, :] < hi[:, None]) \
        & (np.abs(delta) <= radius)
    return idx, delta, keep


def _kernel_1d(delta, keep, width):
    w = np.exp(-0.5 * (delta / width) ** 2) / np.sqrt(2.0 * np.pi * width**2)
    return np.where(keep, w, 0.0)


class FourierChebGrid:
    """Uniform periodic x, y grid with second-kind Chebyshev z nodes."""

    def __init__(self, Lx, Ly, nx, ny, nz, z0, z1):
        self.Lx, self.Ly = float(Lx), float(Ly)
        self.nx, self.ny, self.nz = int(nx), int(ny), int(nz)
        self.z0, self.z1 = float(z0), float(z1)
        self.hx = self.Lx / self.nx
        self.hy = self.Ly / self.ny
        self.x = self.hx * np.arange(self.nx)
        self.y = self.hy * np.arange(self.ny)
        self.z = cheb_nodes(self.nz, z0, z1)
        self.wz = clenshaw_curtis_weights(self.nz, z0, z1)

    @classmethod
    def from_params(cls, geometry, params):
        return cls(geometry.Lx, geometry.Ly, params.Nx, params.Ny, params.Nz,
                   params.z0, params.z1)

    def shape(self):
        return (self.nx, self.ny, self.nz)

    def _stencils(self, positions, width, radius_xy, radius_z):
        p = np.atleast_2d(positions)
        ix, dx, kx = _axis_stencil_uniform(p[:, 0], self.hx, self.nx,
                                           radius_xy)
        iy, dy, ky = _axis_stencil_uniform(p[:, 1], self.hy, self.ny,
                                           radius_xy)
        iz, dz, kz = _axis_stencil_cheb(p[:, 2], self.z, radius_z)
        return ((ix, _kernel_1d(dx, kx, width)),
                (iy, _kernel_1d(dy, ky, width)),
                (iz, _kernel_1d(dz, kz, width)))

    def spread(self, positions, strengths, width, radius_xy, radius_z):
        """Accumulate sum_k q_k K(x - p_k) on the grid nodes."""
        out = np.zeros(self.nx * self.ny * self.nz)
        p = np.atleast_2d(positions)
        q = np.atleast_1d(strengths)
        if p.shape[0] == 0:
            return out.reshape(self.shape())
        if np.any((p[:, 2] < self.z0) | (p[:, 2] > self.z1)):
            raise ValueError("point outside the extended z domain")
        (ix, wx), (iy, wy), (iz, wz) = self._stencils(
            p, width, radius_xy, radius_z)
        for a in range(0, p.shape[0], _CHUNK):
            b = min(a + _CHUNK, p.shape[0])
            w = (q[a:b, None, None, None]
                 * wx[a:b, :, None, None]
                 * wy[a:b, None, :, None]
                 * wz[a:b, None, None, :])
            flat = ((ix[a:b, :, None, None] * self.ny
                     + iy[a:b, None, :, None]) * self.nz
                    + iz[a:b, None, None, :])
            flat = np.broadcast_to(flat, w.shape)
            out += np.bincount(flat.ravel(), weights=w.ravel(),
                               minlength=out.size)
        return out.reshape(self.shape())

    def interpolate(self, fields, positions, width, radius_xy, radius_z):
        """Quadrature-weighted kernel averages of grid fields at points.

        ``fields`` is one (nx, ny, nz) array or a stack (c, nx, ny, nz);
        returns (N,) or (c, N) values.
        """
        f = np.asarray(fields)
        single = f.ndim == 3
        fs = f[None] if single else f
        p = np.atleast_2d(positions)
        nchan = fs.shape[0]
        vals = np.zeros((nchan, p.shape[0]))
        if p.shape[0] == 0:
            return vals[0] if single else vals
        if np.any((p[:, 2] < self.z0) | (p[:, 2] > self.z1)):
            raise ValueError("point outside the extended z domain")
        (ix, wx), (iy, wy), (iz, wz) = self._stencils(
            p, width, radius_xy, radius_z)
        wzq = wz * self.wz[iz]
        cell = self.hx * self.hy
        for a in range(0, p.shape[0], _CHUNK):
            b = min(a + _CHUNK, p.shape[0])
            w = (wx[a:b, :, None, None]
                 * wy[a:b, None, :, None]
                 * wzq[a:b, None, None, :])
            fv = fs[:, ix[a:b, :, None, None], iy[a:b, None, :, None],
                    iz[a:b, None, None, :]]
            vals[:, a:b] = cell * np.einsum('nxyz,cnxyz->cn', w, fv)
        return vals[0] if single else vals


class PeriodicGrid3d:
    """Uniform triply periodic grid with the same spread/interpolate pair."""

    def __init__(self, Lx, Ly, Lz, nx, ny, nz):
        self.L = (float(Lx), float(Ly), float(Lz))
        self.n = (int(nx), int(ny), int(nz))
        self.h = tuple(L / n for L, n in zip(self.L, self.n))

    def _stencils(self, positions, width, radius):
        p = np.atleast_2d(positions)
        out = []
        for ax in range(3):
            idx, delta, keep = _axis_stencil_uniform(
                p[:, ax], self.h[ax], self.n[ax], radius)
            out.append((idx, _kernel_1d(delta, keep, width)))
        return out

    def spread(self, positions, strengths, width, radius):
        out = np.zeros(self.n[0] * self.n[1] * self.n[2])
        p = np.atleast_2d(positions)
        q = np.atleast_1d(strengths)
        if p.shape[0] == 0:
            return out.reshape(self.n)
        (ix, wx), (iy, wy), (iz, wz) = self._stencils(p, width, radius)
        for a in range(0, p.shape[0], _CHUNK):
            b = min(a + _CHUNK, p.shape[0])
            w = (q[a:b, None, None, None]
                 * wx[a:b, :, None, None]
                 * wy[a:b, None, :, None]
                 * wz[a:b, None, None, :])
            flat = ((ix[a:b, :, None, None] * self.n[1]
                     + iy[a:b, None, :, None]) * self.n[2]
                    + iz[a:b, None, None, :])
            flat = np.broadcast_to(flat, w.shape)
            out += np.bincount(flat.ravel(), weights=w.ravel(),
                               minlength=out.size)
        return out.reshape(self.n)

    def interpolate(self, fields, positions, width, radius):
        f = np.asarray(fields)
        single = f.ndim == 3
        fs = f[None] if single else f
        p = np.atleast_2d(positions)
        vals = np.zeros((fs.shape[0], p.shape[0]))
        if p.shape[0] == 0:
            return vals[0] if single else vals
        (ix, wx), (iy, wy), (iz, wz) = self._stencils(p, width, radius)
        cell = self.h[0] * self.h[1] * self.h[2]
        for a in range(0, p.shape[0], _CHUNK):
            b = min(a + _CHUNK, p.shape[0])
            w = (wx[a:b, :, None, None]
                 * wy[a:b, None, :, None]
                 * wz[a:b, None, None, :])
            fv = fs[:, ix[a:b, :, None, None], iy[a:b, None, :, None],
                    iz[a:b, None, None, :]]
            vals[:, a:b] = cell * np.einsum('nxyz,cnxyz->cn', w, fv)
        return vals[0] if single else vals
