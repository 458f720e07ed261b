"""Exception hierarchy shared across the package."""


class SprayOptError(Exception):
    """Base class for all package errors."""

    category = "error"


class InvalidArgumentError(SprayOptError, ValueError):
    """An argument violates a documented precondition."""

    category = "validation"


class NumericalFailureError(SprayOptError, RuntimeError):
    """A linear-algebra operation failed beyond recoverable jitter."""

    category = "numerical"

    def __init__(self, message: str, matrix: str = ""):
        super().__init__(message)
        self.matrix = matrix


class FitFailureError(SprayOptError, RuntimeError):
    """Every hyperparameter restart failed; carries per-restart diagnostics."""

    category = "numerical"

    def __init__(self, message: str, diagnostics=None):
        super().__init__(message)
        self.diagnostics = list(diagnostics or [])


class PhaseError(SprayOptError, RuntimeError):
    """A campaign operation was called in the wrong lifecycle phase."""

    category = "phase"


class VersionMismatchError(SprayOptError, RuntimeError):
    """A persisted document has an unsupported format version."""

    category = "version"
