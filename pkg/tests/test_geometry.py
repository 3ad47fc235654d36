import numpy as np
import pytest

from slabewald.geometry import (ChargeSystem, SlabGeometry, SurfaceCharge,
                                load_charges_csv, save_charges_csv)


def _geo(**kw):
    args = dict(Lx=2.0, Ly=2.0, H=1.0, eps=1.0)
    args.update(kw)
    return SlabGeometry(**args)


def test_validation_of_geometry_inputs():
    with pytest.raises(ValueError):
        SlabGeometry(0.0, 1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        SlabGeometry(1.0, 1.0, 1.0, -1.0)
    with pytest.raises(ValueError):
        SlabGeometry(1.0, 1.0, 1.0, 1.0, eps_b=-0.1)
    geo = SlabGeometry(1.0, 1.0, 1.0, 2.0, eps_b=0.0)  # vacuum-like allowed
    assert geo.eps_t == 2.0


def test_image_strengths_and_exterior_factors():
    geo = _geo(eps_b=0.5)
    assert abs(geo.image_strength_bottom(1.0) - 1.0 / 3.0) < 1e-15
    assert abs(geo.exterior_factor_bottom() - 4.0 / 3.0) < 1e-15
    assert geo.image_strength_top(2.0) == 0.0


def test_electroneutrality_trivial_pair():
    sys_ = ChargeSystem(_geo(), [[0.5, 0.5, 0.4], [1.0, 1.0, 0.6]],
                        [1.0, -1.0], 0.01)
    assert sys_.check_electroneutrality() == 0.0
    sys_.require_electroneutral()


def test_electroneutrality_counterions_with_uniform_walls():
    n = 6140
    lxy = 185.8
    geo = SlabGeometry(lxy, lxy, 50.0, 1.0)
    sigma = -n / (2.0 * lxy**2)
    rng = np.random.default_rng(0)
    pos = np.column_stack([rng.uniform(0, lxy, n), rng.uniform(0, lxy, n),
                           rng.uniform(1, 49, n)])
    sys_ = ChargeSystem(geo, pos, np.ones(n), 0.25,
                        SurfaceCharge.uniform(sigma, sigma))
    assert abs(sys_.check_electroneutrality()) < 1e-12 * n


def test_single_charge_rejected():
    sys_ = ChargeSystem(_geo(), [[0.5, 0.5, 0.5]], [1.0], 0.01)
    assert abs(sys_.check_electroneutrality() - 1.0) < 1e-15
    with pytest.raises(ValueError):
        sys_.require_electroneutral()


def test_containment_validation():
    sys_ = ChargeSystem(_geo(), [[0.1, 0.1, 0.02]], [0.0], 0.01)
    with pytest.raises(ValueError):
        sys_.validate(n_sigma=4.0)
    ok = ChargeSystem(_geo(), [[0.1, 0.1, 0.5]], [0.0], 0.01)
    ok.validate(n_sigma=4.0)


def test_truncated_gaussian_mass_is_within_tail_bound():
    # quadrature of a truncated cloud captures >= 99.9% of the charge
    from slabewald.gridops import FourierChebGrid
    g_w = 0.05
    grid = FourierChebGrid(2.0, 2.0, 48, 48, 64, -0.5, 1.5)
    rho = grid.spread(np.array([[1.0, 1.0, 0.5]]), np.array([1.0]),
                      g_w, 4.0 * g_w, 4.0 * g_w)
    mass = float((rho * grid.wz[None, None, :]).sum() * grid.hx * grid.hy)
    assert abs(mass - 1.0) < 1e-3


def test_surface_charge_kinds_and_mismatch_error():
    geo = _geo()
    sb, st = SurfaceCharge.uniform(0.25, -0.25).sample(geo, 8, 8)
    assert np.all(sb == 0.25) and np.all(st == -0.25)
    g = SurfaceCharge.gaussian(s=0.2, charge_b=0.5, charge_t=-0.5)
    sb, st = g.sample(geo, 64, 64)
    cell = (geo.Lx / 64) * (geo.Ly / 64)
    assert abs(sb.sum() * cell - 0.5) < 1e-6
    assert abs(g.total_charge(geo)) < 1e-6
    with pytest.raises(ValueError):
        SurfaceCharge.from_arrays(np.zeros((4, 4)), np.zeros((8, 8)))
    arr = SurfaceCharge.from_arrays(np.ones((4, 4)), -np.ones((4, 4)))
    with pytest.raises(ValueError):
        arr.sample(geo, 8, 8)


def test_charge_csv_roundtrip(tmp_path):
    pos = np.array([[0.1, 0.2, 0.3], [1.5, 0.7, 0.9]])
    q = np.array([1.0, -1.0])
    path = tmp_path / "charges.csv"
    save_charges_csv(path, pos, q)
    p2, q2 = load_charges_csv(path)
    assert np.array_equal(p2, pos) and np.array_equal(q2, q)
    empty = tmp_path / "empty.csv"
    empty.write_text("x,y,z,q\n")
    p3, q3 = load_charges_csv(empty)
    assert p3.shape == (0, 3) and q3.shape == (0,)
