"""
Exception hierarchy for pyqspectral.

The command-line front door maps each category onto a process exit code:
configuration problems exit with 2, numeric failures with 3 and failed
verification checks with 4.
"""


class PyQSpectralError(Exception):
    """Base class of every error raised by this package."""

    exit_code = 1


class ConfigError(PyQSpectralError, ValueError):
    """A constraint on user supplied parameters or data is violated."""

    exit_code = 2

    def __init__(self, message: str, violations: list[str] | None = None) -> None:
        self.violations = list(violations) if violations else [message]
        super().__init__(message)


class DegenerateInputError(ConfigError):
    """The input makes a relative measure meaningless (for example a zero function)."""


class NumericError(PyQSpectralError, ArithmeticError):
    """Base class of numeric failures."""

    exit_code = 3


class PrecisionEscalationError(NumericError):
    """The requested tolerance cannot be met with the current working digits."""

    def __init__(self, message: str, required_digits: int) -> None:
        self.required_digits = required_digits
        super().__init__(message)


class PoleError(NumericError):
    """Gamma_q was evaluated at one of its poles."""


class ConvergenceError(NumericError):
    """An infinite product or series is not guaranteed to converge."""


class LatticeRangeError(NumericError):
    """A lattice window or time grid is too small for the requested stencil."""


class KernelCoverageError(NumericError):
    """A kernel table does not cover the index sums a transform needs."""


class CalibrationError(NumericError):
    """The probe family produced inconsistent round-trip scales."""

    def __init__(self, message: str, diagnostics: dict) -> None:
        self.diagnostics = diagnostics
        super().__init__(message)


class VerificationFailure(PyQSpectralError):
    """At least one verification check did not pass."""

    exit_code = 4
