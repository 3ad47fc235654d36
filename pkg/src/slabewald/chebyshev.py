"""Fourier-Chebyshev transforms on a doubly periodic slab grid.

The grid is uniform and periodic in x, y and uses second-kind Chebyshev
points in z.  Transforms go between grid values and mixed coefficients
(Fourier modes in x, y; Chebyshev coefficients in z).  The Chebyshev
coefficient convention has no 1/2 factor on the zeroth coefficient:
f(x) = sum_n a_n T_n(x).
"""

import numpy as np
import scipy.fft as sfft


def cheb_nodes(n, z0=-1.0, z1=1.0):
    """Second-kind Chebyshev points on [z0, z1], ascending."""
    if n < 2:
        raise ValueError("need at least 2 Chebyshev points")
    x = np.cos(np.pi * np.arange(n - 1, -1, -1) / (n - 1))
    return 0.5 * (z0 + z1) + 0.5 * (z1 - z0) * x


def clenshaw_curtis_weights(n, z0=-1.0, z1=1.0):
    """Clenshaw-Curtis quadrature weights for ``cheb_nodes(n, z0, z1)``.

    Exact for polynomials of degree <= n-1.  Returned in ascending node
    order to match :func:`cheb_nodes`.
    """
    N = n - 1
    theta = np.pi * np.arange(1, N) / N
    v = np.ones(N - 1)
    if N % 2 == 0:
        wend = 1.0 / (N**2 - 1)
        for k in range(1, N // 2):
            v -= 2.0 * np.cos(2 * k * theta) / (4 * k**2 - 1)
        v -= np.cos(N * theta) / (N**2 - 1)
    else:
        wend = 1.0 / N**2
        for k in range(1, (N - 1) // 2 + 1):
            v -= 2.0 * np.cos(2 * k * theta) / (4 * k**2 - 1)
    w = np.empty(n)
    w[0] = w[-1] = wend
    w[1:-1] = 2.0 * v / N
    return 0.5 * (z1 - z0) * w[::-1].copy()


def cheb_transform(values, axis=-1, workers=1):
    """Chebyshev coefficients from values at ascending second-kind points."""
    v = np.flip(values, axis=axis)
    n = v.shape[axis]
    a = sfft.dct(v, type=1, axis=axis, workers=workers) / (2 * (n - 1))
    sl = [slice(None)] * a.ndim
    sl[axis] = slice(1, n - 1)
    a[tuple(sl)] *= 2.0
    return a


def cheb_inverse(coeffs, axis=-1, workers=1):
    """Values at ascending second-kind points from Chebyshev coefficients."""
    a = np.copy(coeffs)
    n = a.shape[axis]
    sl = [slice(None)] * a.ndim
    sl[axis] = slice(1, n - 1)
    a[tuple(sl)] *= 0.5
    v = sfft.dct(a, type=1, axis=axis, workers=workers)
    return np.flip(v, axis=axis)


def cheb_derivative(coeffs, z0=-1.0, z1=1.0, axis=-1):
    """Chebyshev coefficients of d/dz given coefficients on [z0, z1]."""
    a = np.moveaxis(coeffs, axis, -1)
    n = a.shape[-1]
    b = np.zeros_like(a)
    if n >= 2:
        b[..., n - 2] = 2.0 * (n - 1) * a[..., n - 1]
        for m in range(n - 3, -1, -1):
            b[..., m] = b[..., m + 2] + 2.0 * (m + 1) * a[..., m + 1]
        b[..., 0] *= 0.5
    b *= 2.0 / (z1 - z0)
    return np.moveaxis(b, -1, axis)


def cheb_eval(coeffs, z, z0=-1.0, z1=1.0, axis=-1):
    """Evaluate a Chebyshev series at points ``z`` inside [z0, z1].

    ``z`` may be a scalar or 1-d array; the evaluation axis of ``coeffs``
    is contracted against T_n(z).
    """
    zarr = np.atleast_1d(np.asarray(z, dtype=float))
    x = np.clip(2.0 * (zarr - z0) / (z1 - z0) - 1.0, -1.0, 1.0)
    n = coeffs.shape[axis]
    T = np.cos(np.arange(n)[:, None] * np.arccos(x)[None, :])
    out = np.tensordot(np.moveaxis(coeffs, axis, -1), T, axes=([-1], [0]))
    if np.isscalar(z) or np.asarray(z).ndim == 0:
        out = out[..., 0]
    return out


def fourier_wavenumbers(nx, ny, lx, ly):
    """Angular wavenumbers (kx, ky) of the periodic grid, fft ordering."""
    kx = 2.0 * np.pi * sfft.fftfreq(nx, d=1.0 / nx) / lx
    ky = 2.0 * np.pi * sfft.fftfreq(ny, d=1.0 / ny) / ly
    return kx, ky


def fcct_forward(values, workers=1):
    """Forward fast Fourier-Chebyshev transform of an (Nx, Ny, Nz) field.

    Fourier transform over the periodic x, y axes (normalized so the
    coefficient of each mode is its amplitude) composed with a Chebyshev
    coefficient transform along z.
    """
    nx, ny = values.shape[0], values.shape[1]
    vhat = sfft.fft2(values, axes=(0, 1), workers=workers) / (nx * ny)
    return cheb_transform(vhat, axis=2, workers=workers)


def fcct_inverse(coeffs, workers=1, real=False):
    """Inverse of :func:`fcct_forward`; ``real=True`` drops roundoff imag."""
    nx, ny = coeffs.shape[0], coeffs.shape[1]
    v = cheb_inverse(coeffs, axis=2, workers=workers)
    out = sfft.ifft2(v * (nx * ny), axes=(0, 1), workers=workers)
    return out.real if real else out
