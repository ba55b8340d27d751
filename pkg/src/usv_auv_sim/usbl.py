"""Ultra-short baseline positioning chain.

The surface vehicle carries a small cross of hydrophones with spacing d
and receives a tone of frequency f from each underwater vehicle. The
phase differences across the array encode the direction cosines of the
arrival; together with the (pressure-sensed) depth they invert to a
horizontal position estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleGeometryError


@dataclass(frozen=True)
class UsblConfig:
    """Array geometry and signal constants for one acoustic channel.

    f      signal frequency (Hz)
    d      hydrophone spacing (m)
    c      speed of sound (m/s)
    sigma  phase-noise standard deviation (rad)
    """

    f: float = 15000.0
    d: float = 0.033
    c: float = 1500.0
    sigma: float = 0.01

    def __post_init__(self):
        if self.f <= 0 or self.d <= 0 or self.c <= 0:
            raise ValueError("f, d, c must be positive")
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")

    @property
    def phase_gain(self) -> float:
        """Phase difference per unit direction cosine: 2 pi f d / c (rad)."""
        return 2.0 * math.pi * self.f * self.d / self.c


@dataclass(frozen=True)
class UsvState:
    """Surface vehicle pose: horizontal position plus local surface elevation (m)."""

    x: float
    y: float
    eta: float = 0.0


@dataclass(frozen=True)
class AuvTruth:
    """True underwater vehicle position; depth zk is positive down (m)."""

    xk: float
    yk: float
    zk: float

    def __post_init__(self):
        if self.zk <= 0:
            raise ValueError("depth zk must be positive")


@dataclass(frozen=True)
class PhaseMeasurement:
    """Phase differences along the two array axes (rad)."""

    dphi_x: float
    dphi_y: float

    def __post_init__(self):
        if not (math.isfinite(self.dphi_x) and math.isfinite(self.dphi_y)):
            raise ValueError("phase measurement must be finite")


def slant_range(usv: UsvState, auv: AuvTruth) -> float:
    """Straight-line distance from the array to the AUV.

    The array rides the sea surface, so the effective vertical separation
    is the AUV depth plus the surface elevation at the USV.
    """
    z_eff = auv.zk + usv.eta
    return math.sqrt((auv.xk - usv.x) ** 2 + (auv.yk - usv.y) ** 2 + z_eff**2)


def synthesize_measurement(
    usv: UsvState, auv: AuvTruth, cfg: UsblConfig, rng: np.random.Generator
) -> PhaseMeasurement:
    """Phase differences for the true geometry plus zero-mean Gaussian noise.

    Deterministic for a fixed generator state; sigma = 0 consumes no draws.
    """
    s = slant_range(usv, auv)
    gain = cfg.phase_gain / s
    dphi_x = gain * (auv.xk - usv.x)
    dphi_y = gain * (auv.yk - usv.y)
    if cfg.sigma > 0:
        nx, ny = rng.normal(0.0, cfg.sigma, 2)
        dphi_x += nx
        dphi_y += ny
    return PhaseMeasurement(dphi_x, dphi_y)


def estimate_position(
    meas: PhaseMeasurement, zk: float, usv: UsvState, cfg: UsblConfig
) -> tuple[float, float]:
    """Invert phase differences plus known depth into a horizontal position.

    The phase differences divided by the array gain are the direction
    cosines (a, b); the vertical direction cosine fixes the slant range
    from the known depth, and the horizontal offset follows. Raises
    InfeasibleGeometryError when a^2 + b^2 >= 1 (noise pushed the
    direction cosines off the unit sphere); callers treat that as a
    measurement dropout.
    """
    a = meas.dphi_x / cfg.phase_gain
    b = meas.dphi_y / cfg.phase_gain
    rho2 = a * a + b * b
    if rho2 >= 1.0:
        raise InfeasibleGeometryError(
            f"direction cosines exceed the unit sphere (a^2 + b^2 = {rho2:.6g})"
        )
    z_eff = zk + usv.eta
    if z_eff <= 0.0:
        raise InfeasibleGeometryError(
            f"effective vertical separation {z_eff:.6g} m is not positive"
        )
    s = z_eff / math.sqrt(1.0 - rho2)
    return usv.x + a * s, usv.y + b * s


def measurement_log_row(t, auv_id, meas, est, truth):
    """CSV row (t, auv_id, dphi_x, dphi_y, x_hat, y_hat, x_true, y_true)."""
    return (t, auv_id, meas.dphi_x, meas.dphi_y, est[0], est[1], truth.xk, truth.yk)


MEASUREMENT_LOG_HEADER = ["t", "auv_id", "dphi_x", "dphi_y", "x_hat", "y_hat", "x_true", "y_true"]
