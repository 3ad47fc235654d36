"""Discretization parameters for the split slab solver.

Two accuracy profiles are supported, keyed by the near-field truncation
tolerance delta: delta = 1e-4 gives roughly four digits (grid spacing
g_t/1.4, Gaussian support of 12 cells) and delta = 5e-4 roughly three
(g_t/1.2, 10 cells).  Given either a transverse grid size or a splitting
parameter xi, :func:`plan_grid` fills in every derived quantity and
checks the published constraints.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .kernels import near_gradient_point, split_widths

#: delta -> (cells of Gaussian support n_g, spacing factor g_t / h_xy)
ACCURACY_PROFILES = {1e-4: (12, 1.4), 5e-4: (10, 1.2)}


class ConstraintError(ValueError):
    """A named Ewald-splitting constraint failed."""


@dataclass(frozen=True)
class EwaldParams:
    """Splitting parameter and everything derived from it."""

    xi: float
    g_w: float
    g_t: float
    delta: float
    n_g: int
    n_sigma: float
    h_xy: float
    H_E: float
    r_nf: float
    r_cut: float
    k_max: float
    Nx: int
    Ny: int
    Nz: int
    z0: float
    z1: float
    h_min: float
    n_img: int = 1
    constraints: tuple = field(default=(), compare=False)

    @property
    def screen_width(self):
        """Standard deviation 1/(2 xi) of the screening Gaussian."""
        return 0.0 if np.isinf(self.xi) else 0.5 / self.xi

    def as_dict(self):
        d = {k: getattr(self, k) for k in (
            "xi", "g_w", "g_t", "delta", "n_g", "n_sigma", "h_xy", "H_E",
            "r_nf", "r_cut", "k_max", "Nx", "Ny", "Nz", "z0", "z1",
            "h_min", "n_img")}
        d["constraints"] = [
            {"name": n, "ok": bool(ok), "margin": m}
            for (n, ok, m) in self.constraints]
        return d


def tune_cutoff(xi, g_w, delta):
    """Near-field truncation radius: smallest r where the screened force
    kernel has decayed below delta relative to the unscreened one."""
    if np.isinf(xi):
        return 0.0
    g_t = split_widths(xi, g_w)

    def ratio(r):
        num = near_gradient_point(r, g_w, xi)
        den = near_gradient_point(r, g_w, 0.0)
        return abs(num / den) - delta

    lo, hi = g_t, 20.0 * g_t
    if ratio(lo) <= 0.0:
        return lo
    if ratio(hi) >= 0.0:
        raise ConstraintError("near-field kernel does not decay below "
                              "delta=%g before r=20 g_t; xi too small" % delta)
    return brentq(ratio, lo, hi, xtol=1e-10)


def _constraint_report(xi, g_w, geometry_min_l, H, h_min, H_E, r_nf, r_cut,
                       n_img):
    checks = []
    xi_eff = 1.0 / (g_w * math.sqrt(12.0)) if g_w > 0 else np.inf
    checks.append(("efficiency", xi <= xi_eff, xi_eff - xi))
    checks.append(("near_field_images", r_nf < n_img * H + h_min,
                   n_img * H + h_min - r_nf))
    checks.append(("near_field_minimum_image", r_cut < 0.5 * geometry_min_l,
                   0.5 * geometry_min_l - r_cut))
    checks.append(("far_field_images", 2.0 * H_E < H + h_min,
                   H + h_min - 2.0 * H_E))
    return tuple(checks)


def plan_grid(geometry, g_w, delta, Nxy=None, xi=None, h_min=None,
              strict=True):
    """Build :class:`EwaldParams` from either a grid size or xi.

    Exactly one of ``Nxy`` (transverse grid points, same in x and y when
    Lx = Ly) and ``xi`` must be given.  ``h_min`` is the smallest
    charge-to-wall distance used in the constraint checks; it defaults to
    the containment bound n_sigma g_w.  With ``strict`` a failed
    constraint raises :class:`ConstraintError`, otherwise it warns and
    the report is attached to the result either way.
    """
    if (Nxy is None) == (xi is None):
        raise ValueError("give exactly one of Nxy and xi")
    if delta not in ACCURACY_PROFILES:
        raise ValueError("delta must be one of %s" % list(ACCURACY_PROFILES))
    n_g, factor = ACCURACY_PROFILES[delta]

    if Nxy is not None:
        nx = int(Nxy)
        ny = max(int(round(geometry.Ly / (geometry.Lx / nx))), 1)
        h_xy = geometry.Lx / nx
        g_t = factor * h_xy
        if g_t <= g_w:
            raise ConstraintError(
                "grid spacing %.3g resolves g_w directly; no admissible xi"
                % h_xy)
        xi = 0.5 / math.sqrt(g_t**2 - g_w**2)
    else:
        xi = float(xi)
        g_t = split_widths(xi, g_w)
        h_target = g_t / factor
        nx = max(int(round(geometry.Lx / h_target)), 4)
        ny = max(int(round(geometry.Ly / h_target)), 4)
        h_xy = geometry.Lx / nx

    H_E = 0.5 * n_g * h_xy
    n_sigma = n_g / (2.0 * factor)
    r_nf = tune_cutoff(xi, g_w, delta)
    r_cut = r_nf + n_sigma * g_w
    if h_min is None:
        h_min = n_sigma * g_w
    z0, z1 = -3.0 * H_E, geometry.H + 3.0 * H_E
    nz = int(math.ceil(math.pi * (z1 - z0) / (2.0 * h_xy)))
    checks = _constraint_report(xi, g_w, min(geometry.Lx, geometry.Ly),
                                geometry.H, h_min, H_E, r_nf, r_cut, 1)
    for name, ok, margin in checks:
        if not ok:
            msg = "constraint '%s' violated (margin %.3g)" % (name, margin)
            if strict:
                raise ConstraintError(msg)
            warnings.warn(msg)
    return EwaldParams(
        xi=xi, g_w=g_w, g_t=g_t, delta=delta, n_g=n_g, n_sigma=n_sigma,
        h_xy=h_xy, H_E=H_E, r_nf=r_nf, r_cut=r_cut, k_max=math.pi / h_xy,
        Nx=nx, Ny=ny, Nz=nz, z0=z0, z1=z1, h_min=h_min, constraints=checks)
