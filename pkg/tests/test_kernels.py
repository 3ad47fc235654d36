import mpmath
import numpy as np
import pytest

from slabewald import kernels
from slabewald.kernels import (combined_width, d_erf_over_r, erf_over_r,
                               far_potential_avg, far_potential_point,
                               near_field_avg, near_gradient_avg,
                               near_potential_avg, near_potential_point,
                               self_potential_avg, smoothed_pair_potential,
                               split_widths)

FOUR_PI = 4.0 * np.pi


def test_split_widths_limits_and_value():
    assert split_widths(np.inf, 0.017) == 0.017
    assert abs(split_widths(2.0, 0.0) - 0.25) < 1e-15
    g_t = split_widths(4.3, 0.025)
    assert abs(g_t - np.hypot(1 / 8.6, 0.025)) < 1e-15
    assert abs(split_widths(4.3, 0.025) - 0.11895) < 5e-5


def test_avg_kernel_is_point_kernel_at_sqrt2_width():
    rng = np.random.default_rng(0)
    r = rng.uniform(0.01, 2.0, 64)
    a = near_potential_avg(r, 0.03, 5.0)
    b = near_potential_point(r, 0.03 * np.sqrt(2.0), 5.0)
    assert np.max(np.abs(a - b)) < 1e-15


def test_point_charge_limit():
    r = np.array([0.4, 1.3])
    # xi -> 0 and g_w -> 0 recovers the bare Coulomb potential
    val = near_potential_point(r, 1e-9, 0.0)
    assert np.allclose(val, 1.0 / (FOUR_PI * r), rtol=1e-12)
    grad = kernels.near_gradient_point(r, 1e-9, 0.0)
    assert np.allclose(grad, -1.0 / (FOUR_PI * r**2), rtol=1e-10)


def test_avg_kernel_decays_below_delta_at_cutoff():
    from slabewald.params import tune_cutoff
    g_w, xi, delta = 0.01, 3.0, 1e-4
    r_nf = tune_cutoff(xi, g_w, delta)
    n_sigma = 12 / (2 * 1.4)
    r_cut = r_nf + n_sigma * g_w
    point_scale = smoothed_pair_potential(np.array([r_cut]), g_w)[0]
    assert abs(near_potential_avg(np.array([r_cut]), g_w, xi)[0]) \
        < delta * point_scale


def test_field_zero_at_origin_and_fd_match():
    g_w, xi = 0.02, 4.0
    g_t = split_widths(xi, g_w)
    assert near_field_avg(np.array([0.0]), g_w, xi)[0] == 0.0
    h = 1e-6 * g_t
    r = np.array([g_t])
    fd = (near_potential_avg(r + h, g_w, xi)
          - near_potential_avg(r - h, g_w, xi)) / (2 * h)
    an = near_gradient_avg(r, g_w, xi)
    assert abs(fd[0] - an[0]) < 1e-8 * abs(an[0])


def test_point_kernel_positive_monotone():
    g_w, xi = 0.05, 2.0
    r = np.linspace(1e-4, 3.0, 500)
    g = near_potential_point(r, g_w, xi)
    assert np.all(g >= -1e-15)
    assert np.all(np.diff(g) <= 1e-15)


def test_r0_limit_against_series_oracle():
    g_w, xi = 0.03, 7.0
    lim = near_potential_point(np.array([0.0]), g_w, xi)[0]
    expect = np.sqrt(2.0 / np.pi) / (FOUR_PI) * (
        1.0 / g_w - 1.0 / np.sqrt(g_w**2 + 0.5 / xi**2))
    assert abs(lim - expect) < 1e-15
    # high-precision small-r oracle
    c1 = mpmath.sqrt(2) * g_w
    c2 = mpmath.sqrt(2 * g_w**2 + 1.0 / xi**2)
    r = mpmath.mpf("1e-12")
    orac = (mpmath.erf(r / c1) - mpmath.erf(r / c2)) / r / (4 * mpmath.pi)
    assert abs(lim - float(orac)) < 1e-13


def test_small_r_series_branch_continuity():
    g_w, xi = 0.05, 3.0
    c = 2.0 * g_w
    r = np.array([0.00999 * c, 0.01001 * c])
    vals = d_erf_over_r(r, c)
    with mpmath.workdps(40):
        ref = [float((2 / mpmath.sqrt(mpmath.pi)) * mpmath.exp(
            -(x / c) ** 2) / (c * x) - mpmath.erf(x / c) / x**2)
            for x in r]
    assert np.allclose(vals, ref, rtol=1e-12)


def test_self_potential_subtracted_limit():
    g_w, xi = 1e-10, 6.8
    sub = self_potential_avg(g_w, xi, subtract_unsplit=True)
    expect = -(2.0 / np.sqrt(np.pi)) * xi / FOUR_PI  # c2 -> 1/xi
    assert abs(sub - expect) < 1e-10 * abs(expect)


@pytest.mark.parametrize("g_w,xi", [(0.01, 3.0), (0.1, 1.0), (0.025, 26.0)])
def test_split_identity_pointwise_and_averaged(g_w, xi):
    r = np.linspace(1e-3, 4.0, 300)
    total_avg = near_potential_avg(r, g_w, xi) + far_potential_avg(r, g_w, xi)
    assert np.max(np.abs(total_avg - smoothed_pair_potential(r, g_w))) \
        < 1e-12
    total_pt = near_potential_point(r, g_w, xi) \
        + far_potential_point(r, g_w, xi)
    expect = erf_over_r(r, np.sqrt(2) * g_w) / FOUR_PI
    assert np.max(np.abs(total_pt - expect)) < 1e-12


def test_combined_width_edges():
    assert combined_width(0.1, np.inf) == np.sqrt(2) * 0.1
    assert combined_width(0.1, 0.0) == np.inf
    assert erf_over_r(np.array([1.0]), np.inf)[0] == 0.0
