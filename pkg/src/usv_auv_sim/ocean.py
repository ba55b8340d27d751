"""Sea-state models: shallow-water surface waves and superposed Lamb-vortex currents.

The surface is a linearized shallow-water basin (flat bottom, reflective
walls) advanced by an explicit time-symmetric scheme under a CFL substep
bound; underwater turbulence is a static superposition of viscous Lamb
vortices whose rotational velocity field is divergence-free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ResonanceError, SolverDivergenceError

GRAVITY = 9.81  # m/s^2

# tolerance on |cos(k L)| below which the tidal mode is treated as resonant
RESONANCE_TOL = 1e-12


@dataclass
class WaveConfig:
    """Constants of the tidal basin.

    h      water depth (m)
    g      gravitational acceleration (m/s^2)
    omega  tidal angular frequency (rad/s)
    eta0   surface amplitude at the shore point x'=0, t=0 (m)
    L      offshore length (m)
    dx     grid spacing of the simulated basin (m)
    """

    h: float = 120.0
    g: float = GRAVITY
    omega: float = 2.0 * math.pi / 43200.0
    eta0: float = 5.0
    L: float = 200.0
    dx: float = 4.0

    def __post_init__(self):
        if self.h <= 0:
            raise ValueError("water depth must be positive")
        if self.dx <= 0:
            raise ValueError("grid spacing must be positive")
        if self.omega <= 0:
            raise ValueError("angular frequency must be positive")

    @property
    def wave_speed(self) -> float:
        """Long-wave phase speed sqrt(g h) (m/s)."""
        return math.sqrt(self.g * self.h)

    @property
    def wavelength(self) -> float:
        """Tidal wavelength (2 pi / omega) * sqrt(g h) (m)."""
        return 2.0 * math.pi / self.omega * self.wave_speed

    @property
    def wavenumber(self) -> float:
        return 2.0 * math.pi / self.wavelength

    @property
    def max_stable_dt(self) -> float:
        """CFL-compliant substep bound 0.5 * dx / sqrt(g h) (s)."""
        return 0.5 * self.dx / self.wave_speed


def analytic_eta(cfg: WaveConfig, x: float | np.ndarray, t: float):
    """Closed-form tidal elevation at offshore coordinate x and time t.

    Uses the standing-tide profile R_L * cos(k x) / cos(k L) with the
    amplitude R_L calibrated so that the elevation at (x=0, t=0) equals
    cfg.eta0, and takes the real part of the harmonic time factor.
    Raises ResonanceError when L sits on the quarter-wavelength
    resonance where cos(k L) vanishes.
    """
    k = cfg.wavenumber
    cos_kl = math.cos(k * cfg.L)
    if abs(cos_kl) < RESONANCE_TOL:
        raise ResonanceError(
            f"offshore length {cfg.L} m is at the quarter-wavelength resonance "
            f"(wavelength {cfg.wavelength:.6g} m); surface amplitude diverges"
        )
    r_l = cfg.eta0 * cos_kl  # calibration: eta(0, 0) == eta0
    return r_l * np.cos(k * np.asarray(x)) / cos_kl * math.cos(cfg.omega * t)


@dataclass
class WaveField:
    """Collocated cell-centered basin state.

    eta, u, v are (nx, ny) arrays of surface elevation (m) and horizontal
    velocity (m/s) sampled at cell centers x_i = (i + 1/2) dx. Walls sit on
    the outer cell faces, so the basin spans [0, nx*dx] x [0, ny*dx].
    """

    eta: np.ndarray
    u: np.ndarray
    v: np.ndarray
    nx: int
    ny: int
    dx: float
    t: float = 0.0

    @classmethod
    def from_eta(cls, eta: np.ndarray, dx: float, t: float = 0.0) -> "WaveField":
        eta = np.asarray(eta, dtype=float)
        return cls(
            eta=eta.copy(),
            u=np.zeros_like(eta),
            v=np.zeros_like(eta),
            nx=eta.shape[0],
            ny=eta.shape[1],
            dx=float(dx),
            t=t,
        )

    @classmethod
    def rest(cls, nx: int, ny: int, dx: float) -> "WaveField":
        return cls.from_eta(np.zeros((nx, ny)), dx)

    def cell_centers(self):
        """1D arrays of cell-center coordinates along x and y."""
        x = (np.arange(self.nx) + 0.5) * self.dx
        y = (np.arange(self.ny) + 0.5) * self.dx
        return x, y

    def volume(self) -> float:
        """Total surface volume sum(eta) * dx^2 (m^3)."""
        return float(np.sum(self.eta)) * self.dx**2

    def validate(self):
        if not (self.eta.shape == self.u.shape == self.v.shape == (self.nx, self.ny)):
            raise ValueError("eta, u, v must share the (nx, ny) shape")
        for name, arr in (("eta", self.eta), ("u", self.u), ("v", self.v)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"non-finite values in {name}")


def _ddx_even(f: np.ndarray, dx: float, out: np.ndarray | None = None) -> np.ndarray:
    """Centered x-derivative with even (zero-gradient) wall ghosts."""
    if out is None:
        out = np.empty_like(f)
    if f.shape[0] == 1:
        out[:] = 0.0
        return out
    inv = 1.0 / (2.0 * dx)
    np.subtract(f[2:, :], f[:-2, :], out=out[1:-1, :])
    np.subtract(f[1, :], f[0, :], out=out[0, :])
    np.subtract(f[-1, :], f[-2, :], out=out[-1, :])
    out *= inv
    return out


def _ddy_even(f: np.ndarray, dx: float, out: np.ndarray | None = None) -> np.ndarray:
    if out is None:
        out = np.empty_like(f)
    if f.shape[1] == 1:
        out[:] = 0.0
        return out
    inv = 1.0 / (2.0 * dx)
    np.subtract(f[:, 2:], f[:, :-2], out=out[:, 1:-1])
    np.subtract(f[:, 1], f[:, 0], out=out[:, 0])
    np.subtract(f[:, -1], f[:, -2], out=out[:, -1])
    out *= inv
    return out


def _ddx_odd(f: np.ndarray, dx: float, out: np.ndarray | None = None) -> np.ndarray:
    """Centered x-derivative with odd (no-normal-flow) wall ghosts."""
    if out is None:
        out = np.empty_like(f)
    if f.shape[0] == 1:
        out[:] = 0.0
        return out
    inv = 1.0 / (2.0 * dx)
    np.subtract(f[2:, :], f[:-2, :], out=out[1:-1, :])
    np.add(f[1, :], f[0, :], out=out[0, :])
    np.add(f[-1, :], f[-2, :], out=out[-1, :])
    out[-1, :] *= -1.0
    out *= inv
    return out


def _ddy_odd(f: np.ndarray, dx: float, out: np.ndarray | None = None) -> np.ndarray:
    if out is None:
        out = np.empty_like(f)
    if f.shape[1] == 1:
        out[:] = 0.0
        return out
    inv = 1.0 / (2.0 * dx)
    np.subtract(f[:, 2:], f[:, :-2], out=out[:, 1:-1])
    np.add(f[:, 1], f[:, 0], out=out[:, 0])
    np.add(f[:, -1], f[:, -2], out=out[:, -1])
    out[:, -1] *= -1.0
    out *= inv
    return out


def step_wave(fld: WaveField, cfg: WaveConfig, dt_env: float) -> WaveField:
    """Advance the basin by dt_env seconds and return the new field.

    Internally subdivides dt_env into CFL-compliant substeps. Each substep
    is a time-symmetric kick-drift-kick update: half a momentum kick from
    the elevation gradient, a full continuity drift from the fresh
    velocities, then the second half kick from the new elevation. Plain
    forward-time stepping of the first-order wave system grows
    unconditionally; the symmetric splitting keeps every Fourier mode on
    the unit circle with second-order accuracy. Reflective walls (zero
    normal flow through the ghost cells) conserve total volume.
    """
    if dt_env <= 0:
        raise ValueError("dt_env must be positive")
    n_sub = max(1, math.ceil(dt_env / cfg.max_stable_dt))
    dt = dt_env / n_sub
    eta = np.array(fld.eta, dtype=float)
    u = np.array(fld.u, dtype=float)
    v = np.array(fld.v, dtype=float)
    dx = fld.dx
    gx = np.empty_like(eta)
    gy = np.empty_like(eta)
    du = np.empty_like(eta)
    dv = np.empty_like(eta)

    def kick(scale):
        u_step = scale * cfg.g * dt
        _ddx_even(eta, dx, out=gx)
        _ddy_even(eta, dx, out=gy)
        np.multiply(gx, u_step, out=gx)
        np.multiply(gy, u_step, out=gy)
        np.subtract(u, gx, out=u)
        np.subtract(v, gy, out=v)

    # consecutive half kicks merge into full kicks between the drifts
    with np.errstate(invalid="ignore", over="ignore"):
        kick(0.5)
        for s in range(n_sub):
            _ddx_odd(u, dx, out=du)
            _ddy_odd(v, dx, out=dv)
            du += dv
            du *= dt * cfg.h
            np.subtract(eta, du, out=eta)
            kick(0.5 if s == n_sub - 1 else 1.0)
            if not np.all(np.isfinite(eta)):
                raise SolverDivergenceError(
                    f"wave solver diverged at substep {s + 1}/{n_sub} "
                    f"(t = {fld.t + (s + 1) * dt:.6g} s, dt = {dt:.6g} s)",
                    substep=s + 1,
                    time=fld.t + (s + 1) * dt,
                )
    return WaveField(eta=eta, u=u, v=v, nx=fld.nx, ny=fld.ny, dx=dx, t=fld.t + dt_env)


def sample_eta(fld: WaveField, x: float, y: float) -> float:
    """Bilinear surface elevation at an arbitrary point, clamped to the basin."""
    return _bilinear(fld.eta, fld.dx, x, y)


def _bilinear(grid: np.ndarray, dx: float, x: float, y: float) -> float:
    nx, ny = grid.shape
    gx = min(max(x / dx - 0.5, 0.0), nx - 1.0)
    gy = min(max(y / dx - 0.5, 0.0), ny - 1.0)
    i0 = min(int(gx), nx - 2) if nx > 1 else 0
    j0 = min(int(gy), ny - 2) if ny > 1 else 0
    fx = gx - i0
    fy = gy - j0
    if nx == 1:
        fx = 0.0
    if ny == 1:
        fy = 0.0
    i1 = min(i0 + 1, nx - 1)
    j1 = min(j0 + 1, ny - 1)
    return float(
        grid[i0, j0] * (1 - fx) * (1 - fy)
        + grid[i1, j0] * fx * (1 - fy)
        + grid[i0, j1] * (1 - fx) * fy
        + grid[i1, j1] * fx * fy
    )


def initial_wave_field(
    cfg: WaveConfig,
    lx: float,
    ly: float,
    seiche_amp: float = 1.0,
    modes=((1, 0), (0, 1), (1, 1)),
) -> WaveField:
    """Basin state at t=0: tidal profile plus a few standing seiche modes.

    The tidal profile over a basin much shorter than the tidal wavelength
    is nearly uniform; the seiche modes add surface motion on the scale of
    the basin so the sea state actually evolves during an episode.
    """
    nx = max(1, round(lx / cfg.dx))
    ny = max(1, round(ly / cfg.dx))
    x = (np.arange(nx) + 0.5) * cfg.dx
    y = (np.arange(ny) + 0.5) * cfg.dx
    xg, yg = np.meshgrid(x, y, indexing="ij")
    eta = np.broadcast_to(analytic_eta(cfg, xg, 0.0), (nx, ny)).copy()
    if seiche_amp != 0.0 and modes:
        amp = seiche_amp / len(modes)
        for mx, my in modes:
            eta += amp * np.cos(mx * np.pi * xg / lx) * np.cos(my * np.pi * yg / ly)
    return WaveField.from_eta(eta, cfg.dx)


def export_wave_csv(fld: WaveField, path: str):
    """Write the field snapshot as CSV rows (x, y, eta, u, v)."""
    from .csvio import atomic_write_csv

    x, y = fld.cell_centers()
    rows = []
    for i in range(fld.nx):
        for j in range(fld.ny):
            rows.append((x[i], y[j], fld.eta[i, j], fld.u[i, j], fld.v[i, j]))
    atomic_write_csv(path, "wave-field", ["x", "y", "eta", "u", "v"], rows)


# --- Lamb-vortex turbulence -------------------------------------------------


@dataclass(frozen=True)
class Vortex:
    """A single viscous vortex: center (m), intensity Gamma (m^2/s), core radius delta (m)."""

    x0: float
    y0: float
    gamma: float
    delta: float

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("vortex radius must be positive")


@dataclass(frozen=True)
class VortexSet:
    """Superposition of Lamb vortices defining the turbulence field."""

    vortices: tuple[Vortex, ...] = ()

    @classmethod
    def random(
        cls,
        rng: np.random.Generator,
        n: int,
        area: float,
        gamma_range=(5.0, 20.0),
        delta_range=(10.0, 30.0),
    ) -> "VortexSet":
        """n vortices with seeded-uniform centers, intensities and radii."""
        vs = []
        for _ in range(n):
            x0, y0 = rng.uniform(0.0, area, 2)
            gamma = rng.uniform(*gamma_range)
            delta = rng.uniform(*delta_range)
            vs.append(Vortex(x0, y0, gamma, delta))
        return cls(tuple(vs))

    def __len__(self):
        return len(self.vortices)


@dataclass(frozen=True)
class CurrentSample:
    """Current velocity components (m/s) and their Euclidean norm."""

    vx: float
    vy: float

    @property
    def speed(self) -> float:
        return math.hypot(self.vx, self.vy)


ZERO_CURRENT = CurrentSample(0.0, 0.0)


def current_velocity(vortices: VortexSet, p) -> CurrentSample:
    """Rotational velocity at point p summed over all vortices.

    Each vortex contributes the Lamb profile (Gamma / (2 pi r)) *
    (1 - exp(-r^2 / delta^2)) tangentially; the x-component carries the
    minus sign and the y-component the plus sign so the field is the curl
    of a stream function (divergence-free). The center value is the
    removable-singularity limit (0, 0).
    """
    x, y = float(p[0]), float(p[1])
    vx = 0.0
    vy = 0.0
    for v in vortices.vortices:
        dxc = x - v.x0
        dyc = y - v.y0
        r2 = dxc * dxc + dyc * dyc
        if r2 == 0.0:
            continue  # tangential profile vanishes at the center
        g = -math.expm1(-r2 / (v.delta * v.delta)) / r2
        vx += -v.gamma * dyc / (2.0 * math.pi) * g
        vy += v.gamma * dxc / (2.0 * math.pi) * g
    return CurrentSample(vx, vy)


def current_velocity_grid(vortices: VortexSet, xg: np.ndarray, yg: np.ndarray):
    """Vectorized current field over coordinate arrays; returns (vx, vy)."""
    xg = np.asarray(xg, dtype=float)
    yg = np.asarray(yg, dtype=float)
    vx = np.zeros(np.broadcast(xg, yg).shape)
    vy = np.zeros_like(vx)
    for v in vortices.vortices:
        dxc = xg - v.x0
        dyc = yg - v.y0
        r2 = dxc * dxc + dyc * dyc
        with np.errstate(invalid="ignore", divide="ignore"):
            g = np.where(r2 > 0.0, -np.expm1(-r2 / (v.delta**2)) / np.where(r2 > 0, r2, 1.0), 0.0)
        vx += -v.gamma * dyc / (2.0 * np.pi) * g
        vy += v.gamma * dxc / (2.0 * np.pi) * g
    return vx, vy


def vorticity(vortices: VortexSet, p) -> float:
    """Scalar vorticity at point p: sum of Gaussian cores Gamma/(pi delta^2) exp(-r^2/delta^2)."""
    x, y = float(p[0]), float(p[1])
    w = 0.0
    for v in vortices.vortices:
        r2 = (x - v.x0) ** 2 + (y - v.y0) ** 2
        w += v.gamma / (math.pi * v.delta**2) * math.exp(-r2 / v.delta**2)
    return w
