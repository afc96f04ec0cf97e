"""
Error types for the complex-action lab
Each error class carries the CLI exit code it maps to
"""

from typing import Optional


class LabError(Exception):
    """Base class for all lab errors."""

    exit_code = 1


class ConfigurationError(LabError, ValueError):
    """Invalid configuration or invalid domain object parameters."""

    exit_code = 2

    def __init__(self, message: str, field: Optional[str] = None):
        self.field = field
        if field:
            message = f"{field}: {message}"
        super().__init__(message)


class CapExceededError(LabError):
    """A computation would exceed one of the configured size caps."""

    exit_code = 3


class OracleTooLargeError(CapExceededError):
    """Brute-force path enumeration would exceed the enumeration cap."""

    def __init__(self, n_paths: int, cap: int):
        self.n_paths = n_paths
        self.cap = cap
        super().__init__(
            f"oracle too large: {n_paths} paths to enumerate, cap is {cap}"
        )


class ExpansionTooLargeError(CapExceededError):
    """Substitution expansion would produce a word longer than the cap."""

    def __init__(self, projected_length: int, cap: int):
        self.projected_length = projected_length
        self.cap = cap
        super().__init__(
            f"projected output length {projected_length} exceeds cap {cap}"
        )


class NumericalError(LabError, ArithmeticError):
    """A numerical procedure failed to produce a usable result."""

    exit_code = 4


class NoClassicalSolutionError(NumericalError):
    """No Newton seed converged to a classical solution."""


class FitError(NumericalError):
    """A growth fit could not be performed on the given sequence."""
