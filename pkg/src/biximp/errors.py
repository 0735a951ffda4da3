"""Exception hierarchy shared by all modules.

The CLI maps these onto process exit codes: numerical failures exit 1,
configuration/IO problems exit 2, physical-regime violations exit 3.
"""


class BiximpError(Exception):
    """Base class for all package errors."""


class ConfigError(BiximpError):
    """Malformed or missing configuration input."""

    exit_code = 2


class RegimeError(BiximpError):
    """Parameters outside the physical regime an operation supports."""

    exit_code = 3


class ParameterError(RegimeError):
    """Invalid model parameters (wrong parity, zero couplings, ...)."""


class ExistenceError(RegimeError):
    """A requested bound-state solution does not exist for these parameters."""


class TimingError(RegimeError):
    """A time-resolved measurement was requested before it is well defined."""


class NumericalError(BiximpError):
    """Root search or eigensolver failed to converge to tolerance."""

    exit_code = 1

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class RangeError(NumericalError):
    """Intermediate quantity overflowed the floating-point range."""
