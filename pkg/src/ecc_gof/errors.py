"""Exception types raised by the public API."""


class EccGofError(Exception):
    """Base class for all package-specific errors."""


class DegenerateInput(EccGofError):
    """Point configuration too degenerate for the requested construction."""


class DimensionUnsupported(EccGofError):
    """Requested construction is not available in this ambient dimension."""


class DimensionMismatch(EccGofError):
    """Two inputs that must share an ambient dimension do not."""


class SizeMismatch(EccGofError):
    """Sample size does not match what a fitted model expects."""


class TooLarge(EccGofError):
    """Input exceeds a hard size limit of a brute-force construction."""


class BudgetExceeded(EccGofError):
    """Simplex enumeration passed the configured cap."""


class InvalidConfig(EccGofError):
    """Parameter outside its documented range."""


class InvalidSpec(EccGofError):
    """Malformed distribution or transform specification."""


class NotUnivariate(EccGofError):
    """A univariate-only operation was applied to a multivariate spec."""


class ParseError(EccGofError):
    """Malformed text input (CSV, JSON or spec grammar).

    Attributes
    ----------
    position : optional (row, column) or character offset of the failure.
    """

    def __init__(self, message, position=None):
        super().__init__(message)
        self.position = position
