"""Exception hierarchy shared by every module.

Each class carries the process exit code the CLI maps it to.
"""


class PciError(Exception):
    exit_code = 1


class SchemaError(PciError):
    """A mapped column is missing from the input file."""

    exit_code = 3


class InsufficientDataError(PciError):
    """Too few usable rows for the requested computation."""

    exit_code = 4


class DataValidationError(PciError):
    exit_code = 5


class SingularityError(PciError):
    """Predictor covariance is numerically rank deficient."""

    exit_code = 6

    def __init__(self, message, columns=()):
        super().__init__(message)
        self.columns = tuple(columns)


class InfeasibleError(PciError):
    """No correlation value on the grid yields a PSD joint covariance."""

    exit_code = 7

    def __init__(self, message, eigenvalues_at_zero=None):
        super().__init__(message)
        self.eigenvalues_at_zero = eigenvalues_at_zero


class DomainError(PciError, ValueError):
    exit_code = 8


class CapacityError(PciError):
    exit_code = 9


class DegenerateTestError(PciError):
    """The log-rank variance is zero (no events, or no informative risk sets)."""

    exit_code = 10
