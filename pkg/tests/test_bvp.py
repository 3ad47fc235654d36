import numpy as np
import pytest

from slabewald.bvp import (BvpFactor, BvpPlan, bvp_solve, solve_dense,
                           solve_k0_dirichlet)
from slabewald.chebyshev import (cheb_derivative, cheb_inverse, cheb_nodes,
                                 cheb_transform)


def _residual(y, k, f_cheb, z0=-1.0, z1=1.0):
    # extended precision keeps the double-differentiation oracle quiet
    yl = y.astype(np.longdouble)
    d2 = cheb_derivative(cheb_derivative(yl, z0, z1), z0, z1)
    vals = np.polynomial.chebyshev.chebval(np.linspace(-1, 1, 101), d2) \
        - k**2 * np.polynomial.chebyshev.chebval(
            np.linspace(-1, 1, 101), yl) \
        - np.polynomial.chebyshev.chebval(
            np.linspace(-1, 1, 101), f_cheb.astype(np.longdouble))
    return vals.astype(float)


def test_zero_rhs_zero_bc_gives_zero():
    y = bvp_solve(2.0, np.zeros(20))
    assert np.max(np.abs(y)) < 1e-14


def test_manufactured_cos_on_reference_interval():
    nz = 32
    z = cheb_nodes(nz)
    f = cheb_transform(-(np.pi**2 + 1.0) * np.cos(np.pi * z))
    y = bvp_solve(1.0, f, alpha=-1.0, beta=1.0)
    assert np.max(np.abs(cheb_inverse(y) - np.cos(np.pi * z))) < 1e-12


def test_k0_double_integral():
    # y'' = 1 with homogeneous Dirichlet data: y = (z^2 - 1)/2
    nz = 16
    z = cheb_nodes(nz)
    f = np.zeros(nz)
    f[0] = 1.0
    y = bvp_solve(0.0, f)
    assert np.max(np.abs(cheb_inverse(y) - 0.5 * (z**2 - 1))) < 1e-13


def test_mapped_interval_robin_data():
    z0, z1, k = 0.3, 2.7, 3.0
    nz = 48
    z = cheb_nodes(nz, z0, z1)
    # y = exp(-z) cos(z): y'' - k^2 y = (-2 sin... computed symbolically)
    y_ex = np.exp(-z) * np.cos(z)
    dy_ex = -np.exp(-z) * (np.cos(z) + np.sin(z))
    d2y_ex = 2.0 * np.exp(-z) * np.sin(z)
    f = cheb_transform(d2y_ex - k**2 * y_ex)
    alpha = dy_ex[-1] + k * y_ex[-1]
    beta = dy_ex[0] - k * y_ex[0]
    y = bvp_solve(k, f, z0, z1, alpha=alpha, beta=beta)
    assert np.max(np.abs(cheb_inverse(y) - y_ex)) < 1e-12


@pytest.mark.parametrize("k", [0.5, 3.0, 20.0])
def test_banded_matches_dense(k):
    rng = np.random.default_rng(3)
    for nz in (16, 48, 64):
        z = cheb_nodes(nz)
        f = cheb_transform(np.exp(-3 * z**2) * np.sin(2 * z))
        yb = bvp_solve(k, f, alpha=0.3, beta=-1.1)
        yd = solve_dense(k, f, alpha=0.3, beta=-1.1)
        assert np.max(np.abs(yb - yd)) < 1e-12


def test_random_smooth_residual_property():
    rng = np.random.default_rng(7)
    # nz must resolve both f and the e^{+-kz} boundary layers
    for k, nz in ((0.7, 48), (5.0, 48), (40.0, 80)):
        z = cheb_nodes(nz)
        fv = np.exp(-2 * z**2) * np.cos(3 * z + 0.5) + 0.2 * z
        f = cheb_transform(fv)
        alpha, beta = rng.standard_normal(2)
        y = bvp_solve(k, f, alpha=alpha, beta=beta)
        res = _residual(y, k, f)
        assert np.max(np.abs(res)) < 1e-10 * max(np.max(np.abs(fv)), 1.0)
        # boundary conditions to 1e-11 at the ends
        dy = cheb_inverse(cheb_derivative(y))
        yv = cheb_inverse(y)
        assert abs(dy[-1] + k * yv[-1] - alpha) < 1e-11 * max(abs(alpha), 1.0)
        assert abs(dy[0] - k * yv[0] - beta) < 1e-11 * max(abs(beta), 1.0)


def test_spectral_convergence_six_orders():
    errs = {}
    for nz in (8, 32):
        z = cheb_nodes(nz)
        f = cheb_transform(-(np.pi**2 + 4.0) * np.cos(np.pi * z))
        y = bvp_solve(2.0, f, alpha=-2.0, beta=2.0)
        errs[nz] = np.max(np.abs(cheb_inverse(y) - np.cos(np.pi * z)))
    assert errs[8] / errs[32] > 1e6


def test_batch_factor_matches_single_solves():
    nz = 40
    plan = BvpPlan(nz, 0.0, 2.0)
    ks = np.array([0.4, 2.0, 11.0])
    fact = BvpFactor(plan, ks)
    z = cheb_nodes(nz, 0.0, 2.0)
    f = cheb_transform(np.sin(z) * np.exp(-z))
    batch = fact.solve(np.tile(f, (3, 1)), alpha=0.1, beta=0.2)
    for i, k in enumerate(ks):
        single = bvp_solve(k, f, 0.0, 2.0, alpha=0.1, beta=0.2)
        assert np.max(np.abs(batch[i] - single)) < 1e-13


def test_k0_dirichlet_endpoints_vanish():
    plan = BvpPlan(20)
    rng = np.random.default_rng(1)
    f = rng.standard_normal(20) * np.exp(-0.3 * np.arange(20))
    y = solve_k0_dirichlet(plan, f)
    vals = cheb_inverse(y)
    assert abs(vals[0]) < 1e-12 and abs(vals[-1]) < 1e-12


def test_singular_schur_guard():
    plan = BvpPlan(16)
    with pytest.raises(np.linalg.LinAlgError):
        BvpFactor(plan, np.array([0.0]))
