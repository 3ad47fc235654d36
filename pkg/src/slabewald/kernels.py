"""Closed-form kernels for Gaussian-charge Ewald splitting.

Every charge carries a normalized Gaussian density of standard deviation
``g_w``; splitting convolves it with a screening Gaussian of standard
deviation ``1/(2 xi)``.  The resulting pair kernels are differences of
erf terms.  All functions are elementwise over numpy arrays and use the
convention that the bare Coulomb pair potential is q1 q2 / (4 pi eps r).
"""

import numpy as np
from scipy.special import erf

FOUR_PI = 4.0 * np.pi
TWO_OVER_SQRTPI = 2.0 / np.sqrt(np.pi)


def gaussian3d(r2, width):
    """Unit-mass isotropic 3-d Gaussian of standard deviation ``width``."""
    return np.exp(-0.5 * r2 / width**2) / (2.0 * np.pi * width**2) ** 1.5


def split_widths(xi, g_w):
    """Total smeared width g_t of a g_w charge screened at parameter xi."""
    if np.isinf(xi):
        return float(g_w)
    return float(np.hypot(0.5 / xi, g_w))


def combined_width(g_w, xi):
    """Width c with erf(r/c)/r the pointwise screened-by-xi potential."""
    if np.isinf(xi):
        return np.sqrt(2.0) * g_w
    if xi == 0.0:
        return np.inf
    return np.sqrt(2.0 * g_w**2 + 1.0 / xi**2)


def erf_over_r(r, c):
    """erf(r/c)/r, with the analytic r -> 0 limit."""
    r = np.asarray(r, dtype=float)
    if np.isinf(c):
        return np.zeros_like(r)
    if c == 0.0:
        with np.errstate(divide="ignore"):
            return np.where(r > 0, 1.0 / np.where(r > 0, r, 1.0), np.inf)
    small = r < 1e-10 * c
    rs = np.where(small, 1.0, r)
    out = erf(rs / c) / rs
    return np.where(small, TWO_OVER_SQRTPI / c, out)


def d_erf_over_r(r, c):
    """d/dr of erf(r/c)/r.

    The two closed-form terms cancel catastrophically for r << c, so a
    Taylor series is used below r = 0.01 c.
    """
    r = np.asarray(r, dtype=float)
    if np.isinf(c):
        return np.zeros_like(r)
    if c == 0.0:
        with np.errstate(divide="ignore"):
            return np.where(r > 0, -1.0 / np.where(r > 0, r, 1.0) ** 2,
                            -np.inf)
    small = r < 1e-2 * c
    rs = np.where(small, c, r)
    x = rs / c
    closed = TWO_OVER_SQRTPI * np.exp(-x * x) / (c * rs) - erf(x) / rs**2
    u = (r / c) ** 2
    series = TWO_OVER_SQRTPI / c**2 * (r / c) * (
        -2.0 / 3.0 + u * (2.0 / 5.0 + u * (-1.0 / 7.0 + u / 27.0)))
    return np.where(small, series, closed)


def _avg_width(g_w, xi):
    if np.isinf(xi):
        return 2.0 * g_w
    if xi == 0.0:
        return np.inf
    return np.sqrt(4.0 * g_w**2 + 1.0 / xi**2)


def near_potential_point(r, g_w, xi, eps=1.0):
    """Pointwise near-field kernel: screened part of the smoothed Coulomb."""
    c1 = np.sqrt(2.0) * g_w
    c2 = combined_width(g_w, xi)
    return (erf_over_r(r, c1) - erf_over_r(r, c2)) / (FOUR_PI * eps)


def near_potential_avg(r, g_w, xi, eps=1.0):
    """Gaussian-averaged near-field kernel (acts between charge centers)."""
    c1 = 2.0 * g_w
    c2 = _avg_width(g_w, xi)
    return (erf_over_r(r, c1) - erf_over_r(r, c2)) / (FOUR_PI * eps)


def near_gradient_avg(r, g_w, xi, eps=1.0):
    """d/dr of :func:`near_potential_avg`; field is -q * this * r_hat."""
    c1 = 2.0 * g_w
    c2 = _avg_width(g_w, xi)
    return (d_erf_over_r(r, c1) - d_erf_over_r(r, c2)) / (FOUR_PI * eps)


def near_field_avg(r, g_w, xi, eps=1.0):
    """Radial averaged near-field field strength, -d(avg kernel)/dr."""
    return -near_gradient_avg(r, g_w, xi, eps)


def near_gradient_point(r, g_w, xi, eps=1.0):
    """d/dr of :func:`near_potential_point`."""
    c1 = np.sqrt(2.0) * g_w
    c2 = combined_width(g_w, xi)
    return (d_erf_over_r(r, c1) - d_erf_over_r(r, c2)) / (FOUR_PI * eps)


def self_potential_avg(g_w, xi, eps=1.0, subtract_unsplit=False):
    """Averaged near-field kernel at r = 0 (the Ewald self term).

    With ``subtract_unsplit`` the xi = 0 self potential q/(4 pi^1.5 eps g_w)
    is removed analytically, which stays finite as g_w -> 0.
    """
    c2 = _avg_width(g_w, xi)
    if subtract_unsplit:
        return -TWO_OVER_SQRTPI / c2 / (FOUR_PI * eps)
    return TWO_OVER_SQRTPI * (0.5 / g_w - 1.0 / c2) / (FOUR_PI * eps)


def smoothed_pair_potential(r, g_w, eps=1.0):
    """Un-split averaged pair kernel erf(r/(2 g_w))/(4 pi eps r)."""
    return erf_over_r(r, 2.0 * g_w) / (FOUR_PI * eps)


def smoothed_pair_gradient(r, g_w, eps=1.0):
    """d/dr of :func:`smoothed_pair_potential`."""
    return d_erf_over_r(r, 2.0 * g_w) / (FOUR_PI * eps)


def pointwise_potential(r, g_w, eps=1.0):
    """Pointwise potential of a single Gaussian charge."""
    return erf_over_r(r, np.sqrt(2.0) * g_w) / (FOUR_PI * eps)


def far_potential_avg(r, g_w, xi, eps=1.0):
    """Averaged far-field pair kernel (complement of the near kernel)."""
    g_t = split_widths(xi, g_w)
    return erf_over_r(r, 2.0 * g_t) / (FOUR_PI * eps)


def far_potential_point(r, g_w, xi, eps=1.0):
    """Pointwise far-field pair kernel (complement of the near kernel)."""
    return erf_over_r(r, combined_width(g_w, xi)) / (FOUR_PI * eps)
