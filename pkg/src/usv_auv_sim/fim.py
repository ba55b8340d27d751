"""Fisher-information geometry of the positioning chain and USV path planning.

The information a set of phase-difference channels carries about the
horizontal geometry is assembled from the analytic Jacobians of the
measurement model; the surface vehicle is steered toward the point that
maximizes the determinant of that matrix (equivalently, minimizes the
area of the error ellipse of the inverse bound).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .usbl import AuvTruth, UsblConfig


@dataclass(frozen=True)
class FimMatrix:
    """2x2 symmetric positive semi-definite information matrix."""

    matrix: np.ndarray

    @property
    def det(self) -> float:
        m = self.matrix
        return float(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])


@dataclass(frozen=True)
class GeometrySummary:
    """Symmetric-scene reduction: common slant range, elevation, projection spread.

    s0      common slant range (m)
    gamma0  elevation angle, sin(gamma0) = depth / s0 (rad)
    alphas  pairwise differences of projection azimuths (rad)
    chi     sum of sin^2 over the pairwise differences
    """

    s0: float
    gamma0: float
    alphas: tuple[float, ...]
    chi: float


@dataclass(frozen=True)
class PlannerConfig:
    """Search parameters for the waypoint optimizer.

    bounds is the mission rectangle (xmin, ymin, xmax, ymax) in meters.
    """

    grid_resolution: float = 5.0
    refine_iters: int = 20
    refine_step: float = 0.25
    usv_vmax: float = 5.0
    bounds: tuple[float, float, float, float] = (0.0, 0.0, 200.0, 200.0)

    def __post_init__(self):
        if self.grid_resolution <= 0:
            raise ValueError("grid_resolution must be positive")
        if self.usv_vmax <= 0:
            raise ValueError("usv_vmax must be positive")


@dataclass(frozen=True)
class PlanResult:
    """Chosen waypoint, its objective value, and a degenerate-geometry flag."""

    target: tuple[float, float]
    det: float
    degenerate: bool = False


def _as_configs(cfg, n: int) -> list[UsblConfig]:
    if isinstance(cfg, UsblConfig):
        return [cfg] * n
    cfgs = list(cfg)
    if len(cfgs) != n:
        raise ValueError(f"expected {n} channel configs, got {len(cfgs)}")
    return cfgs


def _as_xyz(a) -> tuple[float, float, float]:
    if isinstance(a, AuvTruth):
        return a.xk, a.yk, a.zk
    x, y, z = a
    return float(x), float(y), float(z)


def _sigma_eff(cfg: UsblConfig) -> float:
    # a noiseless channel carries unbounded information; flooring the noise
    # keeps the matrix finite without moving any argmax (uniform 1/sigma^4)
    return max(cfg.sigma, 1e-12)


def phase_jacobian(usv_xy, auv, cfg: UsblConfig) -> np.ndarray:
    """d(dphi_x, dphi_y) / d(usv_x, usv_y) for one acoustic channel."""
    xk, yk, zk = _as_xyz(auv)
    ux = xk - usv_xy[0]
    wy = yk - usv_xy[1]
    s2 = ux * ux + wy * wy + zk * zk
    s = math.sqrt(s2)
    g = cfg.phase_gain / (s2 * s)
    return np.array(
        [
            [g * (ux * ux - s2), g * ux * wy],
            [g * ux * wy, g * (wy * wy - s2)],
        ]
    )


def fim_numeric(usv_xy, auvs, cfg) -> FimMatrix:
    """Information matrix summed over channels: (1/sigma_k^2) J_k^T J_k.

    An empty channel list yields the zero (information-free) matrix.
    """
    auvs = list(auvs)
    cfgs = _as_configs(cfg, len(auvs))
    j = np.zeros((2, 2))
    for auv, c in zip(auvs, cfgs):
        h = phase_jacobian(usv_xy, auv, c)
        j += h.T @ h / (_sigma_eff(c) ** 2)
    return FimMatrix(j)


def _info_entry_maps(px: np.ndarray, py: np.ndarray, auvs, cfgs):
    """Vectorized entries (j11, j12, j22) of the information matrix over
    candidate USV positions. A zero-range zero-depth channel carries no
    signal and contributes nothing."""
    j11 = np.zeros(np.broadcast(px, py).shape)
    j12 = np.zeros_like(j11)
    j22 = np.zeros_like(j11)
    for auv, c in zip(auvs, cfgs):
        xk, yk, zk = _as_xyz(auv)
        ux = xk - px
        wy = yk - py
        r2 = ux * ux + wy * wy
        s2_raw = r2 + zk * zk
        live = s2_raw > 0.0
        s2 = np.where(live, s2_raw, 1.0)
        # (J^T J) for one channel: (gain^2 / s^6) * (s^4 I - (2 s^2 - r^2) rho rho^T)
        k = np.where(live, c.phase_gain**2 / (_sigma_eff(c) ** 2 * s2**3), 0.0)
        beta = 2.0 * s2 - r2
        j11 += k * (s2 * s2 - beta * ux * ux)
        j22 += k * (s2 * s2 - beta * wy * wy)
        j12 += k * (-beta * ux * wy)
    return j11, j12, j22


def det_map(px: np.ndarray, py: np.ndarray, auvs, cfg) -> np.ndarray:
    """Vectorized det of the information matrix over candidate USV positions."""
    px = np.asarray(px, dtype=float)
    py = np.asarray(py, dtype=float)
    auvs = list(auvs)
    cfgs = _as_configs(cfg, len(auvs))
    j11, j12, j22 = _info_entry_maps(px, py, auvs, cfgs)
    return j11 * j22 - j12 * j12


def geometry_summary(usv_xy, auvs, rel_tol: float = 1e-6) -> GeometrySummary:
    """Reduce a scene where all AUVs share slant range and elevation.

    Raises ValueError if the ranges or elevations differ beyond rel_tol;
    the closed-form determinant below assumes the symmetric scene.
    """
    auvs = list(auvs)
    if not auvs:
        raise ValueError("need at least one AUV")
    ranges = []
    sines = []
    phis = []
    for a in auvs:
        xk, yk, zk = _as_xyz(a)
        ux = xk - usv_xy[0]
        wy = yk - usv_xy[1]
        s = math.sqrt(ux * ux + wy * wy + zk * zk)
        ranges.append(s)
        sines.append(zk / s)
        phis.append(math.atan2(wy, ux))
    s0 = ranges[0]
    if any(abs(s - s0) > rel_tol * s0 for s in ranges):
        raise ValueError("slant ranges are not common across AUVs")
    if any(abs(sn - sines[0]) > rel_tol for sn in sines):
        raise ValueError("elevation angles are not common across AUVs")
    alphas = tuple(phis[i] - phis[j] for i, j in combinations(range(len(phis)), 2))
    chi = sum(math.sin(a) ** 2 for a in alphas)
    return GeometrySummary(s0=s0, gamma0=math.asin(sines[0]), alphas=alphas, chi=chi)


def det_fim_closed(geom: GeometrySummary, cfg: UsblConfig, m: int) -> float:
    """Closed-form determinant for the symmetric scene.

    (4 pi^2 f^2 d^2 / (sigma^2 c^2))^2 *
        [3 m sin^2(gamma0) / s0^4 + ((sin^4(gamma0) + 1)^2 / s0^4) * chi]

    This reduction is a cross-check only; the assembled matrix of
    fim_numeric is the governing objective for planning (the two disagree
    on their coefficient structure, which the test suite quantifies).
    """
    if geom.s0 <= 0:
        raise ValueError("slant range must be positive")
    k = cfg.phase_gain**2 / _sigma_eff(cfg) ** 2
    sin_g = math.sin(geom.gamma0)
    return k * k * (
        3.0 * m * sin_g**2 / geom.s0**4
        + (sin_g**4 + 1.0) ** 2 / geom.s0**4 * geom.chi
    )


def _tie_key(x: float, y: float, current) -> tuple:
    if current is None:
        return (0.0, x, y)
    return (math.hypot(x - current[0], y - current[1]), x, y)


def plan_usv_waypoint(auv_estimates, cfg, pcfg: PlannerConfig, current=None) -> PlanResult:
    """Waypoint maximizing the information determinant over the mission rectangle.

    Coarse grid search at pcfg.grid_resolution, then greedy coordinate
    descent at pcfg.refine_step. Exact ties on the grid break toward the
    smallest distance to `current`, then lexicographically by (x, y).
    When every candidate holds zero information (e.g. all depths zero)
    the centroid of the estimates is returned with the degenerate flag.
    """
    ests = [_as_xyz(e) for e in auv_estimates]
    if not ests:
        raise ValueError("need at least one AUV estimate")
    cfgs = _as_configs(cfg, len(ests))
    x0, y0, x1, y1 = pcfg.bounds
    nx = max(2, int(round((x1 - x0) / pcfg.grid_resolution)) + 1)
    ny = max(2, int(round((y1 - y0) / pcfg.grid_resolution)) + 1)
    xs = np.linspace(x0, x1, nx)
    ys = np.linspace(y0, y1, ny)
    xg, yg = np.meshgrid(xs, ys, indexing="ij")
    j11, j12, j22 = _info_entry_maps(xg, yg, ests, cfgs)
    dets = j11 * j22 - j12 * j12
    best = float(np.max(dets))
    # rank-deficient everywhere (det vanishes relative to the trace scale):
    # no waypoint is better-determined than any other
    trace_scale = float(np.max(0.5 * (j11 + j22))) ** 2
    if best <= 1e-12 * trace_scale or best <= 0.0:
        cx = sum(e[0] for e in ests) / len(ests)
        cy = sum(e[1] for e in ests) / len(ests)
        return PlanResult(target=(cx, cy), det=0.0, degenerate=True)
    ti, tj = np.nonzero(dets >= best * (1.0 - 1e-9))
    candidates = sorted(
        (_tie_key(float(xg[i, j]), float(yg[i, j]), current) for i, j in zip(ti, tj))
    )
    px, py = candidates[0][-2], candidates[0][-1]
    pdet = float(det_map(np.array(px), np.array(py), ests, cfgs))
    step = pcfg.refine_step
    for _ in range(pcfg.refine_iters):
        moved = False
        for ddx, ddy in ((step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)):
            qx = min(max(px + ddx, x0), x1)
            qy = min(max(py + ddy, y0), y1)
            qdet = float(det_map(np.array(qx), np.array(qy), ests, cfgs))
            if qdet > pdet:
                px, py, pdet = qx, qy, qdet
                moved = True
        if not moved:
            break
    return PlanResult(target=(px, py), det=pdet, degenerate=False)


def step_usv(current, target, vmax: float, dt: float, bounds=None) -> tuple[float, float]:
    """Move straight toward the target by at most vmax*dt, never overshooting."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    cx, cy = float(current[0]), float(current[1])
    tx, ty = float(target[0]), float(target[1])
    dist = math.hypot(tx - cx, ty - cy)
    reach = vmax * dt
    if dist <= reach or dist == 0.0:
        nx, ny = tx, ty
    else:
        nx = cx + (tx - cx) / dist * reach
        ny = cy + (ty - cy) / dist * reach
    if bounds is not None:
        x0, y0, x1, y1 = bounds
        nx = min(max(nx, x0), x1)
        ny = min(max(ny, y0), y1)
    return nx, ny
