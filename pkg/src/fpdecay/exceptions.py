"""Exception types shared across the package."""


class FpdecayError(Exception):
    """Base class for all package errors."""


class DimensionError(FpdecayError):
    """Non-square matrix or mismatched dimensions."""


class StabilityError(FpdecayError):
    """Drift matrix is not positively stable (an eigenvalue has Re <= 0)."""


class ConditionError(FpdecayError):
    """System fails one of the structural admissibility conditions."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class SingularSystemError(FpdecayError):
    """Linear system has no unique solution (singular Kronecker sum etc.)."""


class EnvelopeViolationError(FpdecayError):
    """Decay ratio keeps growing at the end of the grid: wrong rate or wrong
    polynomial order for the envelope."""


class QuadratureError(FpdecayError):
    """Quadrature rule too weak for the requested computation."""


class DomainError(FpdecayError):
    """Input outside the mathematical domain of the operation."""


class InsufficientDataError(FpdecayError):
    """Not enough usable samples for a fit."""


class ConfigError(FpdecayError):
    """Invalid scenario configuration; message carries the field path."""
