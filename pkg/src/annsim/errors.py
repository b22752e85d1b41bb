"""Exception types shared across the package."""


class AnnSimError(Exception):
    """Base class for all annsim errors."""


class DimensionMismatch(AnnSimError, ValueError):
    """Two bit vectors of different dimension were combined."""


class RoundBudgetExceeded(AnnSimError, RuntimeError):
    """A probe round was requested after the session's round budget ran out."""


class SessionClosed(AnnSimError, RuntimeError):
    """A closed probe session was used again."""


class AssumptionViolated(AnnSimError, RuntimeError):
    """A search completed without finding any candidate cell.

    This can only happen when the sketch-ball sandwich failed for the
    trial's coin, so the error is surfaced instead of being hidden.
    """


class InvalidRoundBudget(AnnSimError, ValueError):
    """The round budget is too small for the requested parameter regime."""


class ConfigError(AnnSimError, ValueError):
    """An experiment configuration is invalid or infeasible."""
