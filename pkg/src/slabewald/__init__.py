"""Spectral Ewald electrostatics for doubly periodic dielectric slit
channels, with a Brownian-dynamics harness for double-layer studies."""

from .geometry import (ChargeSystem, SlabGeometry, SurfaceCharge,
                       load_charges_csv, save_charges_csv)
from .params import ACCURACY_PROFILES, ConstraintError, EwaldParams, \
    plan_grid, tune_cutoff
from .kernels import split_widths
from .slab import SlabSolver, SolveResult, build_partition, near_field_sum, \
    solve_system
from .dpsolver import solve_triply_periodic

__all__ = [
    "ChargeSystem", "SlabGeometry", "SurfaceCharge", "load_charges_csv",
    "save_charges_csv", "ACCURACY_PROFILES", "ConstraintError", "EwaldParams",
    "plan_grid", "tune_cutoff", "split_widths", "SlabSolver", "SolveResult",
    "build_partition", "near_field_sum", "solve_system",
    "solve_triply_periodic",
]

__version__ = "0.1.0"
