"""Brownian dynamics of monovalent ions with steric repulsion, plus the
closed-form theory curves used to validate equilibrium structure.

Positions evolve by the two-step-noise Euler-Maruyama variant
    z^{n+1} = z^n + mu F(z^n) dt + sqrt(kT mu dt / 2) (W^n + W^{n+1}),
whose equilibrium averages are second-order accurate in dt.  Steps that
leave the slab are discarded and retried with fresh W^{n+1}; per-step
displacements are capped at a multiple of the ion radius.  Time is
reported in units of tau0 = a^2 / (kT mu).
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.spatial import cKDTree

from .dpsolver import solve_triply_periodic
from .gridops import PeriodicGrid3d
from .kernels import (erf_over_r, near_gradient_avg, split_widths, FOUR_PI)
from .params import ACCURACY_PROFILES, tune_cutoff


# -- steric interaction ---------------------------------------------------

@dataclass(frozen=True)
class StericParams:
    """Truncated, mollified Lennard-Jones repulsion between ions.

    The potential is 4 U0 ((2a/r)^(2p) - (2a/r)^p) + U0, cut to zero at
    its minimum r = 2^(1/p) (2a); the force is capped below r_m at its
    r_m value and the potential continued linearly there.
    """

    a: float
    U0: float = 1.0
    r_m: float = 0.0
    p: int = 6

    @property
    def cutoff(self):
        return 2.0 ** (1.0 / self.p) * 2.0 * self.a


def lj_force(r, s):
    """Unmodified repulsive force -dU_LJ/dr for the 2p-p potential."""
    x = (2.0 * s.a / r) ** s.p
    return 4.0 * s.U0 * s.p * x * (2.0 * x - 1.0) / r


def steric_force(r, s):
    """Piecewise steric force: capped core, LJ flank, zero past cutoff."""
    r = np.asarray(r, dtype=float)
    rs = np.maximum(r, s.r_m) if s.r_m > 0 else np.maximum(r, 1e-12 * s.a)
    f = lj_force(rs, s)
    return np.where(r > s.cutoff, 0.0, f)


def steric_energy(r, s):
    """Potential consistent with :func:`steric_force` (zero at cutoff)."""
    r = np.asarray(r, dtype=float)
    rs = np.clip(r, s.r_m if s.r_m > 0 else 1e-12 * s.a, None)
    x = (2.0 * s.a / rs) ** s.p
    u = 4.0 * s.U0 * (x * x - x) + s.U0
    if s.r_m > 0:
        u = u + lj_force(s.r_m, s) * np.maximum(s.r_m - r, 0.0)
    return np.where(r > s.cutoff, 0.0, u)


# -- integrator -----------------------------------------------------------

@dataclass
class BdConfig:
    dt: float
    steps: int
    equil_steps: int = 0
    mu: float = 1.0
    kT: float = 1.0
    seed: int = 0
    max_disp: float = np.inf
    max_retries: int = 100
    sample_every: int = 50


@dataclass
class BdState:
    positions: np.ndarray
    prev_noise: np.ndarray
    rng: np.random.Generator
    rejections: int = 0
    steps_done: int = 0


def make_state(positions, config):
    rng = np.random.Generator(np.random.Philox(config.seed))
    prev = rng.standard_normal(positions.shape)
    return BdState(np.array(positions, dtype=float), prev, rng)


def bd_step(state, forces, config, z_bounds=None, wrap=None):
    """Advance one step given forces at the current positions.

    ``z_bounds = (lo, hi)`` rejects and retries (with fresh trailing
    noise) any step that moves a particle outside the slab;
    ``wrap = (Lx, Ly, Lz...)`` reduces periodic coordinates instead.
    """
    drift = config.mu * config.dt * forces
    amp = math.sqrt(0.5 * config.kT * config.mu * config.dt)
    for attempt in range(config.max_retries + 1):
        new_noise = state.rng.standard_normal(state.positions.shape) \
            if config.kT > 0 else np.zeros_like(state.positions)
        disp = drift + amp * (state.prev_noise + new_noise)
        if np.isfinite(config.max_disp):
            norms = np.linalg.norm(disp, axis=1, keepdims=True)
            over = norms > config.max_disp
            if np.any(over):
                disp = np.where(over, disp * (config.max_disp / norms), disp)
        cand = state.positions + disp
        if z_bounds is None or (
                np.all(cand[:, 2] > z_bounds[0])
                and np.all(cand[:, 2] < z_bounds[1])):
            if wrap is not None:
                for ax, box in enumerate(wrap):
                    if box is not None:
                        cand[:, ax] = np.mod(cand[:, ax], box)
            state.positions = cand
            state.prev_noise = new_noise
            state.steps_done += 1
            return state
        state.rejections += 1
    raise RuntimeError("unrecoverable configuration: %d retries exhausted"
                       % config.max_retries)


# -- observables ----------------------------------------------------------

@dataclass
class Observables:
    """Density and pair-correlation histograms with shell normalization."""

    H: float
    area: float
    z_bin: float
    r_max: float = 0.0
    r_bin: float = 0.0
    samples: int = 0
    z_counts: np.ndarray = field(default=None)
    pair_counts: np.ndarray = field(default=None)
    _pair_norm: float = 0.0

    def __post_init__(self):
        self.z_edges = np.arange(0.0, self.H + self.z_bin, self.z_bin)
        self.z_counts = np.zeros(self.z_edges.size - 1)
        if self.r_max > 0:
            self.r_edges = np.arange(0.0, self.r_max + self.r_bin, self.r_bin)
            self.pair_counts = np.zeros(self.r_edges.size - 1)

    def record_density(self, z):
        self.z_counts += np.histogram(z, bins=self.z_edges)[0]
        self.samples += 1

    def record_pairs(self, distances, n_pairs_ideal_per_volume):
        self.pair_counts += np.histogram(distances, bins=self.r_edges)[0]
        self._pair_norm += n_pairs_ideal_per_volume

    def density(self):
        """(z centers, n(z)) normalized so the profile integrates to N/area."""
        centers = 0.5 * (self.z_edges[1:] + self.z_edges[:-1])
        vol = self.area * self.z_bin * max(self.samples, 1)
        return centers, self.z_counts / vol

    def pair_correlation(self):
        """(r centers, g2) with ideal-gas shell normalization."""
        centers = 0.5 * (self.r_edges[1:] + self.r_edges[:-1])
        shells = (4.0 / 3.0) * np.pi * (self.r_edges[1:] ** 3
                                        - self.r_edges[:-1] ** 3)
        ideal = shells * self._pair_norm
        with np.errstate(invalid="ignore", divide="ignore"):
            g2 = np.where(ideal > 0, self.pair_counts / ideal, 0.0)
        return centers, g2


# -- theory curves --------------------------------------------------------

def debye_length(eps, kT, weighted_density):
    """Screening length sqrt(eps kT / sum_i n_i q_i^2).

    ``weighted_density`` is sum n_i q_i^2 in charge-squared per volume;
    for a binary monovalent electrolyte of molar concentration M it is
    N_Avogadro * 2M (converted to the working length unit).
    """
    return math.sqrt(eps * kT / weighted_density)


def gaussian_pair_energy(r, g_w, eps, q1q2=-1.0):
    """Electrostatic energy of two Gaussian charges a distance r apart."""
    return q1q2 * erf_over_r(np.asarray(r, float), 2.0 * g_w) / (FOUR_PI * eps)


def dho_pair_correlation(r, steric, g_w, eps, kT, lam, q1q2=-1.0):
    """Screened pair correlation for counter-ion pairs.

    Boltzmann factor of the steric potential plus the Gaussian-charge
    Coulomb energy attenuated by exp(-r/lambda).
    """
    r = np.asarray(r, dtype=float)
    u = steric_energy(r, steric) \
        + gaussian_pair_energy(r, g_w, eps, q1q2) * np.exp(-r / lam)
    return np.exp(-u / kT)


def pnp_constant(sigma, d, eps, kT=1.0, e=1.0):
    """Solve |sigma| = 2 K tan(K/2) eps kT/(d e) for K in (0, pi)."""
    target = abs(sigma) * d * e / (2.0 * eps * kT)
    if target == 0.0:
        return 0.0
    f = lambda k: k * math.tan(0.5 * k) - target
    return brentq(f, 1e-12, math.pi - 1e-9, xtol=1e-14)


def pnp_profile(z, n_ions, geometry, a, kT=1.0, e=1.0):
    """Mean-field counterion density in a slit with equally charged walls.

    The sterically accessible channel has thickness d = H - 2a; walls
    carry sigma = -N e / (2 Lx Ly) each so the system is neutral.
    Returns the number density at heights ``z`` (zero within an ion
    radius of a wall).
    """
    z = np.asarray(z, dtype=float)
    d = geometry.H - 2.0 * a
    sigma = -n_ions * e / (2.0 * geometry.area)
    K = pnp_constant(sigma, d, geometry.eps, kT, e)
    if K == 0.0:
        nm = n_ions / (geometry.area * d)
        prof = np.full_like(z, nm)
    else:
        nm = 2.0 * K**2 * geometry.eps * kT / (d**2 * e**2)
        prof = nm / np.cos(K * (z - 0.5 * geometry.H) / d) ** 2
    inside = (z > a) & (z < geometry.H - a)
    return np.where(inside, prof, 0.0)


# -- force evaluation -----------------------------------------------------

def steric_pair_forces(positions, steric, boxes, tree=None):
    """Pairwise steric forces under minimum image in the periodic axes.

    ``boxes`` is a 3-tuple whose entries are periodic lengths or None.
    """
    n = positions.shape[0]
    out = np.zeros((n, 3))
    if n < 2:
        return out
    if tree is None:
        tree = _periodic_tree(positions, boxes, steric.cutoff)
    pairs = tree.query_pairs(steric.cutoff, output_type="ndarray")
    if pairs.size == 0:
        return out
    d = positions[pairs[:, 0]] - positions[pairs[:, 1]]
    for ax, box in enumerate(boxes):
        if box is not None:
            d[:, ax] -= box * np.round(d[:, ax] / box)
    r = np.sqrt(np.sum(d * d, axis=1))
    f = steric_force(r, steric) / np.where(r > 0, r, 1.0)
    fv = f[:, None] * d
    for ax in range(3):
        out[:, ax] += np.bincount(pairs[:, 0], weights=fv[:, ax], minlength=n)
        out[:, ax] -= np.bincount(pairs[:, 1], weights=fv[:, ax], minlength=n)
    return out


def wall_steric_forces(positions, steric, H):
    """Mirror-particle repulsion from both walls (z component only)."""
    z = positions[:, 2]
    out = np.zeros_like(positions)
    out[:, 2] = steric_force(2.0 * z, steric) \
        - steric_force(2.0 * (H - z), steric)
    return out


def _periodic_tree(positions, boxes, radius):
    shifted = np.array(positions, dtype=float)
    box = []
    for ax, b in enumerate(boxes):
        if b is None:
            zmin = shifted[:, ax].min() - 1.0
            span = shifted[:, ax].max() - zmin
            shifted[:, ax] -= zmin
            box.append(span + radius + 1.0)
        else:
            shifted[:, ax] = np.mod(shifted[:, ax], b)
            box.append(b)
    return cKDTree(shifted, boxsize=box)


class TriplyPeriodicSolver:
    """Split Ewald electrostatics in a periodic box, for BD validation.

    Same spreading machinery as the slab solver but on a uniform z grid
    with an FFT Poisson solve; pair near field under full minimum
    image.
    """

    def __init__(self, box, n_grid, g_w, eps, delta=5e-4, threads=1):
        self.box = tuple(float(b) for b in box)
        self.eps = float(eps)
        self.g_w = float(g_w)
        n_g, factor = ACCURACY_PROFILES[delta]
        h = self.box[0] / n_grid
        self.g_t = factor * h
        if self.g_t <= g_w:
            raise ValueError("grid too fine for splitting at this g_w")
        self.xi = 0.5 / math.sqrt(self.g_t**2 - g_w**2)
        self.radius = 0.5 * n_g * h
        self.r_cut = tune_cutoff(self.xi, g_w, delta) \
            + (0.5 * n_g / factor) * g_w
        if self.r_cut >= 0.5 * min(self.box):
            raise ValueError("near-field cutoff exceeds half the box")
        self.grid = PeriodicGrid3d(*self.box,
                                   n_grid, n_grid,
                                   max(int(round(self.box[2] / h)), 4))
        self.threads = threads

    def forces(self, positions, charges):
        """Electrostatic force (q times averaged field) on each charge."""
        rho = self.grid.spread(positions, charges, self.g_t, self.radius)
        _, efield = solve_triply_periodic(rho, self.eps, *self.box,
                                          with_field=True,
                                          workers=self.threads)
        far = self.grid.interpolate(efield, positions, self.g_t, self.radius)
        near = self._near_field(positions, charges)
        return charges[:, None] * (far.T + near)

    def _near_field(self, positions, charges):
        n = positions.shape[0]
        out = np.zeros((n, 3))
        tree = _periodic_tree(positions, self.box, self.r_cut)
        pairs = tree.query_pairs(self.r_cut, output_type="ndarray")
        if pairs.size == 0:
            return out
        d = positions[pairs[:, 0]] - positions[pairs[:, 1]]
        for ax, box in enumerate(self.box):
            d[:, ax] -= box * np.round(d[:, ax] / box)
        r = np.sqrt(np.sum(d * d, axis=1))
        grad = near_gradient_avg(r, self.g_w, self.xi, self.eps)
        coef = np.where(r > 0, -grad / np.where(r > 0, r, 1.0), 0.0)
        fv = coef[:, None] * d * charges[pairs[:, 1], None]
        for ax in range(3):
            out[:, ax] += np.bincount(pairs[:, 0], weights=fv[:, ax],
                                      minlength=n)
            rev = coef * charges[pairs[:, 0]]
            out[:, ax] -= np.bincount(pairs[:, 1], weights=rev * d[:, ax],
                                      minlength=n)
        return out
