"""
Consolidated exception hierarchy for vqibound.
"""

from typing import Any


class VqiBoundError(Exception):
    """Base exception for all vqibound errors."""

    def __init__(self, message: str, details: dict[str, Any] | None = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}


class ConfigurationError(VqiBoundError):
    """Run-config or settings errors."""
    pass


class InputValidationError(VqiBoundError):
    """A physical precondition on an input was violated."""
    pass


class DataFormatError(VqiBoundError):
    """Malformed series, trace or report file."""
    pass


class PrerequisiteError(VqiBoundError):
    """The Bell-violation prerequisite for a bound claim is not met."""
    pass
