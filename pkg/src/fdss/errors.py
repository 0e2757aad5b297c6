"""Exception hierarchy.

``ValidationError`` subclasses signal bad inputs or configuration and map to
CLI exit code 2; everything else under ``FdssError`` is a runtime failure
(exit code 3).
"""


class FdssError(Exception):
    pass


class ValidationError(FdssError, ValueError):
    pass


class ConfigError(ValidationError):
    pass


class ConstraintViolation(ValidationError):
    pass


class DegenerateFilterError(FdssError):
    pass


class UndefinedPaprError(FdssError):
    pass


class InsufficientSamplesError(ValidationError):
    """Too few samples for the requested readout (a sizing problem, so exit 2)."""


class GradientError(FdssError):
    def __init__(self, index, message=None):
        self.index = index
        super().__init__(message or f"non-finite loss when perturbing coefficient {index}")
