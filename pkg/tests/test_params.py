import numpy as np
import pytest

from slabewald.geometry import SlabGeometry
from slabewald.params import (ACCURACY_PROFILES, ConstraintError, plan_grid,
                              tune_cutoff)


def test_profiles():
    assert ACCURACY_PROFILES[1e-4] == (12, 1.4)
    assert ACCURACY_PROFILES[5e-4] == (10, 1.2)
    ng, fac = ACCURACY_PROFILES[5e-4]
    assert abs(ng / (2 * fac) - 4.17) < 0.01
    ng, fac = ACCURACY_PROFILES[1e-4]
    assert abs(ng / (2 * fac) - 4.29) < 0.01


def test_tuned_alpha_point_charge_limit():
    # alpha = r_nf xi for g_t >> g_w
    alpha = tune_cutoff(1.0, 0.0, 1e-4)
    assert abs(alpha - 3.25) < 0.05
    alpha2 = tune_cutoff(1.0, 0.5 / np.sqrt(3.0), 1e-4)  # g_t = 2 g_w
    assert abs(alpha2 - 3.5) < 0.05


def test_tuned_cutoff_matches_published_value():
    r_nf = tune_cutoff(3.0, 0.01, 1e-4)
    assert abs(r_nf - 1.08) < 0.02


def test_plan_grid_from_xi_reproduces_published_grids():
    import warnings
    geo = SlabGeometry(2.0, 2.0, 0.75, 1.0, 1 / 20, 1 / 50)
    expect = {4.3: (20, 59, 0.5), 9.2: (40, 71, 0.25),
              12.2: (50, 77, 0.20), 26.0: (76, 92, 0.13)}
    for xi, (nxy, nz, h_e) in expect.items():
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            p = plan_grid(geo, 0.025, 5e-4, xi=xi, h_min=4.5 * 0.025,
                          strict=False)
        assert (p.Nx, p.Ny, p.Nz) == (nxy, nxy, nz)
        assert abs(p.H_E - h_e) < 0.01


def test_plan_grid_free_space_experiment_sizes():
    geo = SlabGeometry(28.0, 28.0, 2.0, 1.0, 0.5, 0.2)
    p = plan_grid(geo, 0.01, 1e-4, xi=3.0177, h_min=0.01, strict=False)
    assert (p.Nx, p.Nz) == (236, 84)
    assert abs(p.g_t - 0.166) < 1e-3
    assert abs(p.H_E - 0.71) < 0.005
    assert abs(p.r_nf - 1.08) < 0.01
    geo = SlabGeometry(32.0, 32.0, 2.0, 1.0, 0.5, 0.2)
    p = plan_grid(geo, 0.01, 1e-4, xi=3.0177, h_min=0.01, strict=False)
    assert (p.Nx, p.Nz) == (270, 84)


def test_plan_grid_wall_charge_experiment_size():
    geo = SlabGeometry(2.0, 2.0, 1.0, 1.0, 1 / 20, 1 / 50)
    p = plan_grid(geo, 0.01, 1e-4, xi=6.8, h_min=0.045, strict=False)
    assert (p.Nx, p.Nz) == (38, 87)
    assert abs(p.H_E - 0.32) < 0.005


def test_plan_grid_from_nxy_inverts_xi():
    geo = SlabGeometry(2.0, 2.0, 0.75, 1.0)
    p = plan_grid(geo, 0.025, 5e-4, Nxy=40, h_min=0.2)
    assert p.Nx == 40
    assert abs(p.g_t - 1.2 * 2.0 / 40) < 1e-15
    back = plan_grid(geo, 0.025, 5e-4, xi=p.xi, h_min=0.2)
    assert back.Nx == 40


def test_constraint_names_and_strictness():
    geo = SlabGeometry(2.0, 2.0, 0.75, 1.0, 1 / 20, 1 / 50)
    # efficiency: xi beyond 1/(g_w sqrt 12)
    with pytest.raises(ConstraintError, match="efficiency"):
        plan_grid(geo, 0.025, 5e-4, xi=15.0, h_min=0.1)
    with pytest.warns(UserWarning, match="efficiency"):
        p = plan_grid(geo, 0.025, 5e-4, xi=15.0, h_min=0.1, strict=False)
    assert not all(ok for _, ok, _ in p.constraints)
    with pytest.raises(ConstraintError, match="far_field_images"):
        plan_grid(geo, 0.025, 5e-4, xi=4.3, h_min=4.5 * 0.025)


def test_invariants_of_derived_quantities():
    geo = SlabGeometry(4.0, 4.0, 2.0, 1.0)
    p = plan_grid(geo, 0.02, 1e-4, xi=4.0, h_min=0.2)
    assert abs(p.g_t - np.hypot(1 / 8.0, 0.02)) < 1e-15
    assert abs(p.H_E - 0.5 * p.n_g * p.h_xy) < 1e-15
    assert abs(p.r_cut - (p.r_nf + p.n_sigma * p.g_w)) < 1e-15
    assert abs(p.k_max - np.pi / p.h_xy) < 1e-12
    assert p.z0 == -3 * p.H_E and abs(p.z1 - (2.0 + 3 * p.H_E)) < 1e-15


def test_requires_exactly_one_of_nxy_xi():
    geo = SlabGeometry(2.0, 2.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        plan_grid(geo, 0.01, 1e-4)
    with pytest.raises(ValueError):
        plan_grid(geo, 0.01, 1e-4, Nxy=32, xi=3.0)
