"""Exception types shared across the simulator."""


class ConfigError(Exception):
    """Bad or inconsistent configuration (unknown key, unreadable file, bad value)."""


class ContractError(Exception):
    """Caller violated an interface contract (wrong action count, NaN input, ...)."""


class SolverDivergenceError(Exception):
    """The wave solver produced non-finite values."""

    def __init__(self, message, substep=None, time=None):
        super().__init__(message)
        self.substep = substep
        self.time = time


class ResonanceError(Exception):
    """Offshore length sits on the quarter-wavelength resonance of the tidal mode."""


class InfeasibleGeometryError(Exception):
    """Measured direction cosines leave the unit sphere; treat as a dropout."""


class TrainingDivergenceError(Exception):
    """A learner update produced a non-finite loss or parameter."""

    def __init__(self, message, context=None):
        super().__init__(message)
        self.context = context or {}


class InsufficientDataError(Exception):
    """Replay buffer holds fewer transitions than the requested batch."""
