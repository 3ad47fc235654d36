"""Physical problem definition: slab geometry, Gaussian charges and
wall-bound surface charge densities.

Reduced units throughout: lengths in an arbitrary unit L0, charges in e,
energies in kT; the interior permittivity eps is supplied directly so
the Coulomb pair energy is q1 q2 / (4 pi eps r) and the Bjerrum length
is an input, 1/(4 pi eps).
"""

import numpy as np

ELECTRONEUTRALITY_TOL = 1e-12


class SlabGeometry:
    """Periodic box [0,Lx) x [0,Ly), slab interior 0 < z < H.

    eps is the interior permittivity, eps_b and eps_t the permittivities
    below z = 0 and above z = H.  Zero exterior permittivity is allowed.
    """

    def __init__(self, Lx, Ly, H, eps, eps_b=None, eps_t=None):
        if min(Lx, Ly, H) <= 0:
            raise ValueError("Lx, Ly, H must be positive")
        if eps <= 0:
            raise ValueError("interior permittivity must be positive")
        eps_b = eps if eps_b is None else eps_b
        eps_t = eps if eps_t is None else eps_t
        if eps_b < 0 or eps_t < 0:
            raise ValueError("exterior permittivities must be >= 0")
        self.Lx, self.Ly, self.H = float(Lx), float(Ly), float(H)
        self.eps, self.eps_b, self.eps_t = float(eps), float(eps_b), float(eps_t)

    @property
    def area(self):
        return self.Lx * self.Ly

    def image_strength_bottom(self, q):
        """Strength of the image across z = 0 seen from inside the slab."""
        return -q * (self.eps_b - self.eps) / (self.eps_b + self.eps)

    def image_strength_top(self, q):
        return -q * (self.eps_t - self.eps) / (self.eps_t + self.eps)

    def exterior_factor_bottom(self):
        """Transmission factor for the potential below the slab."""
        return 2.0 * self.eps / (self.eps_b + self.eps)

    def exterior_factor_top(self):
        return 2.0 * self.eps / (self.eps_t + self.eps)


class SurfaceCharge:
    """Charge/area fields on the two walls.

    Carries either closed-form descriptors (uniform, centered Gaussian)
    or explicit samples; :meth:`sample` evaluates both walls on a given
    periodic xy grid.  Smoothness at the far-field resolution is the
    caller's responsibility.
    """

    def __init__(self, kind="none", **kw):
        self.kind = kind
        self.kw = kw

    @classmethod
    def none(cls):
        return cls("none")

    @classmethod
    def uniform(cls, sigma_b, sigma_t):
        return cls("uniform", sigma_b=float(sigma_b), sigma_t=float(sigma_t))

    @classmethod
    def gaussian(cls, s, charge_b, charge_t, center=None):
        """Centered Gaussian blobs integrating to charge_b / charge_t."""
        return cls("gaussian", s=float(s), charge_b=float(charge_b),
                   charge_t=float(charge_t), center=center)

    @classmethod
    def from_arrays(cls, sigma_b, sigma_t):
        sigma_b = np.asarray(sigma_b, dtype=float)
        sigma_t = np.asarray(sigma_t, dtype=float)
        if sigma_b.shape != sigma_t.shape:
            raise ValueError("sigma_b and sigma_t grids differ in shape: "
                             "%s vs %s" % (sigma_b.shape, sigma_t.shape))
        return cls("arrays", sigma_b=sigma_b, sigma_t=sigma_t)

    @property
    def is_zero(self):
        return self.kind == "none"

    def sample(self, geometry, nx, ny):
        """Sample (sigma_b, sigma_t) on the nx x ny periodic grid."""
        if self.kind == "none":
            z = np.zeros((nx, ny))
            return z, z.copy()
        if self.kind == "uniform":
            return (np.full((nx, ny), self.kw["sigma_b"]),
                    np.full((nx, ny), self.kw["sigma_t"]))
        if self.kind == "gaussian":
            s = self.kw["s"]
            cx, cy = self.kw["center"] or (0.5 * geometry.Lx, 0.5 * geometry.Ly)
            x = geometry.Lx * np.arange(nx) / nx
            y = geometry.Ly * np.arange(ny) / ny
            # nearest periodic image of the blob center
            dx = x - cx - geometry.Lx * np.round((x - cx) / geometry.Lx)
            dy = y - cy - geometry.Ly * np.round((y - cy) / geometry.Ly)
            blob = np.exp(-0.5 * (dx[:, None] ** 2 + dy[None, :] ** 2) / s**2)
            blob /= 2.0 * np.pi * s**2
            return self.kw["charge_b"] * blob, self.kw["charge_t"] * blob
        if self.kind == "arrays":
            sb, st = self.kw["sigma_b"], self.kw["sigma_t"]
            if sb.shape != (nx, ny):
                raise ValueError("sampled surface charge has shape %s, "
                                 "grid wants (%d, %d)" % (sb.shape, nx, ny))
            return sb, st
        raise ValueError("unknown surface charge kind %r" % self.kind)

    def total_charge(self, geometry, nx=64, ny=64):
        """Periodic-trapezoid quadrature of sigma_b + sigma_t."""
        sb, st = self.sample(geometry, nx, ny)
        cell = (geometry.Lx / nx) * (geometry.Ly / ny)
        return cell * (sb.sum() + st.sum())


class ChargeSystem:
    """Gaussian charges of common width g_w inside a slab, plus wall charge."""

    def __init__(self, geometry, positions, charges, g_w,
                 surface=None):
        self.geometry = geometry
        self.positions = np.atleast_2d(np.asarray(positions, dtype=float))
        if self.positions.size == 0:
            self.positions = np.zeros((0, 3))
        if self.positions.shape[1] != 3:
            raise ValueError("positions must be (N, 3)")
        self.charges = np.atleast_1d(np.asarray(charges, dtype=float))
        if self.charges.shape[0] != self.positions.shape[0]:
            raise ValueError("positions and charges disagree on N")
        self.g_w = float(g_w)
        self.surface = surface if surface is not None else SurfaceCharge.none()

    @property
    def n(self):
        return self.charges.size

    def with_positions(self, positions):
        """Same system, new charge positions (used by BD and work checks)."""
        return ChargeSystem(self.geometry, positions, self.charges,
                            self.g_w, self.surface)

    def validate(self, n_sigma=4.0):
        """Reject charges whose truncated Gaussians stick out of the slab."""
        margin = n_sigma * self.g_w
        z = self.positions[:, 2]
        bad = (z < margin) | (z > self.geometry.H - margin)
        if np.any(bad):
            raise ValueError(
                "%d charge(s) closer than n_sigma g_w = %.3g to a wall"
                % (int(bad.sum()), margin))

    def check_electroneutrality(self, nx=64, ny=64):
        """Total charge: sum q_k plus wall-charge quadrature."""
        return self.charges.sum() + self.surface.total_charge(
            self.geometry, nx, ny)

    def require_electroneutral(self, nx=64, ny=64):
        resid = self.check_electroneutrality(nx, ny)
        scale = np.abs(self.charges).sum() + abs(resid)
        if abs(resid) > ELECTRONEUTRALITY_TOL * max(scale, 1.0):
            raise ValueError("system is not electroneutral: residual %.3e"
                             % resid)
        return resid


def load_charges_csv(path):
    """Read a charge file with header x,y,z,q; returns (positions, charges)."""
    data = np.genfromtxt(path, delimiter=",", names=True)
    if data.size == 0:
        return np.zeros((0, 3)), np.zeros(0)
    data = np.atleast_1d(data)
    for col in ("x", "y", "z", "q"):
        if col not in (data.dtype.names or ()):
            raise ValueError("charge file must have header x,y,z,q")
    pos = np.column_stack([data["x"], data["y"], data["z"]])
    return pos, np.asarray(data["q"], dtype=float)


def save_charges_csv(path, positions, charges):
    rows = np.column_stack([positions, charges])
    np.savetxt(path, rows, delimiter=",", header="x,y,z,q", comments="",
               fmt="%.17g")
