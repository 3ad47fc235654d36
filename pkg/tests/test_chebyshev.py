import numpy as np
import pytest

from slabewald.chebyshev import (cheb_derivative, cheb_eval, cheb_inverse,
                                 cheb_nodes, cheb_transform,
                                 clenshaw_curtis_weights, fcct_forward,
                                 fcct_inverse)


def test_nodes_are_second_kind_and_ascending():
    z = cheb_nodes(9, 0.0, 2.0)
    assert z[0] == 0.0 and z[-1] == 2.0
    assert np.all(np.diff(z) > 0)
    ref = 1.0 + np.cos(np.pi * np.arange(8, -1, -1) / 8)
    assert np.allclose(z, ref, atol=1e-15)


@pytest.mark.parametrize("n", [5, 12, 33])
def test_quadrature_exact_for_polynomials(n):
    z0, z1 = -1.5, 2.25
    z = cheb_nodes(n, z0, z1)
    w = clenshaw_curtis_weights(n, z0, z1)
    for deg in range(n):
        exact = (z1 ** (deg + 1) - z0 ** (deg + 1)) / (deg + 1)
        assert abs(w @ z**deg - exact) < 1e-12 * max(abs(exact), 1.0)


def test_transform_roundtrip_and_basis():
    rng = np.random.default_rng(0)
    v = rng.standard_normal(17)
    assert np.max(np.abs(cheb_inverse(cheb_transform(v)) - v)) < 1e-13
    # T_3 has a single unit coefficient
    z = cheb_nodes(9)
    a = cheb_transform(4 * z**3 - 3 * z)
    expect = np.zeros(9)
    expect[3] = 1.0
    assert np.allclose(a, expect, atol=1e-14)


def test_derivative_t0_t2_and_sin():
    a = np.zeros(5)
    a[0] = 1.0
    assert np.allclose(cheb_derivative(a), 0.0)
    a = np.zeros(5)
    a[2] = 1.0  # dT2/dx = 4 T1
    d = cheb_derivative(a)
    assert np.allclose(d, [0, 4, 0, 0, 0], atol=1e-14)
    z = cheb_nodes(32, 0.0, np.pi)
    d = cheb_derivative(cheb_transform(np.sin(z)), 0.0, np.pi)
    assert np.max(np.abs(cheb_inverse(d) - np.cos(z))) < 1e-12


def test_eval_matches_grid_and_interior_points():
    z = cheb_nodes(24, -0.5, 1.5)
    a = cheb_transform(np.exp(z))
    assert abs(cheb_eval(a, 0.37, -0.5, 1.5) - np.exp(0.37)) < 1e-13
    pts = np.array([-0.5, 0.0, 1.5])
    assert np.allclose(cheb_eval(a, pts, -0.5, 1.5), np.exp(pts), atol=1e-13)


def test_fcct_constant_field_single_coefficient():
    c = fcct_forward(np.ones((4, 6, 9)))
    assert abs(c[0, 0, 0] - 1.0) < 1e-14
    c[0, 0, 0] = 0.0
    assert np.max(np.abs(c)) < 1e-14


def test_fcct_single_mode_basis_function():
    nx, ny, nz = 8, 4, 9
    x = np.arange(nx) / nx
    z = cheb_nodes(nz)
    t3 = 4 * z**3 - 3 * z
    vals = np.cos(2 * np.pi * x)[:, None, None] * t3[None, None, :] \
        * np.ones((1, ny, 1))
    c = fcct_forward(vals)
    assert abs(c[1, 0, 3] - 0.5) < 1e-14
    assert abs(c[-1, 0, 3] - 0.5) < 1e-14
    c[1, 0, 3] = c[-1, 0, 3] = 0.0
    assert np.max(np.abs(c)) < 1e-13


def test_fcct_roundtrip_random_smooth_field():
    rng = np.random.default_rng(1)
    v = rng.standard_normal((12, 10, 21))
    c = fcct_forward(v)
    back = fcct_inverse(c, real=True)
    assert np.max(np.abs(back - v)) < 1e-13
    # and against a direct DFT + Chebyshev-fit oracle for one xy mode
    nx, ny, nz = v.shape
    z = cheb_nodes(nz)
    mode_z = np.fft.fft2(v, axes=(0, 1))[2, 3] / (nx * ny)
    poly = np.polynomial.chebyshev.Chebyshev.fit(
        z, mode_z, nz - 1, domain=[-1, 1])
    assert np.max(np.abs(poly.coef - c[2, 3, :])) < 1e-10
