"""Exception types shared across the package."""


class VarpflowError(Exception):
    """Base class for all package errors."""


class DimensionError(VarpflowError, ValueError):
    """Grids, fields or parameters disagree in dimension or shape."""


class ParameterError(VarpflowError, ValueError):
    """A numerical parameter lies outside its admissible range."""


class SolverError(VarpflowError, RuntimeError):
    """A linear solve failed to reach the requested relative residual."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class InsufficientDataError(VarpflowError):
    """Too few converged cells to form a verdict."""


class ConfigError(VarpflowError):
    """A run configuration is unreadable or ill-formed."""
