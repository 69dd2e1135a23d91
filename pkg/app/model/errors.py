from typing import Any, Optional


class LabError(Exception):
    """Base class for every error raised by the laboratory."""


class DimensionMismatchError(LabError):
    pass


class IndexOutOfRangeError(LabError):
    pass


class DimensionCapError(LabError):
    pass


class NotHermitianError(LabError):
    pass


class NotAProjectionError(LabError):
    pass


class ExponentError(LabError):
    pass


class LevelOutOfRangeError(LabError):
    pass


class MalformedAlgebraError(LabError):
    pass


class ContractionViolationError(LabError):
    pass


class CorankViolationError(LabError):
    pass


class EnumerationLimitError(LabError):
    pass


class MissingSlotError(LabError):
    pass


class AlphaOrderError(LabError):
    pass


class CertificateError(LabError):
    pass


class InequalityViolationError(LabError):
    """Raised by checkers in strict mode; carries the failing report."""

    def __init__(self, message: str, report: Optional[Any] = None):
        super().__init__(message)
        self.report = report


class ConfigError(LabError):
    """Malformed config file or out-of-range experiment parameter."""
