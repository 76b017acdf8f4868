"""Exception hierarchy shared by the services and the CLI.

Every error carries the process exit code the CLI reports for it:
2 for usage problems, 3 for bad input data, 4 for numerical failures.
"""

EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


class HimaxError(Exception):
    """Base class for all himax errors."""

    exit_code = 1


class UsageError(HimaxError):
    """Invalid command-line options or configuration."""

    exit_code = EXIT_USAGE


# ==================== DATA ERRORS ====================


class DataError(HimaxError):
    """Input data could not be used."""

    exit_code = EXIT_DATA


class FormatError(DataError):
    """Malformed file header or unsupported file variant."""

    pass


class LengthError(DataError):
    """File payload shorter or longer than its header announces."""

    pass


class GeometryError(DataError):
    """Image or patch dimensions do not fit the operation."""

    pass


class ShapeError(DataError):
    """Matrix shapes disagree with each other or with the configuration."""

    pass


# ==================== NUMERICAL ERRORS ====================


class NumericalError(HimaxError):
    """A computation left its domain of validity."""

    exit_code = EXIT_NUMERICAL


class DomainError(NumericalError):
    """An argument is outside the domain of the function."""

    pass


class ConditioningError(NumericalError):
    """A matrix that must be invertible is (numerically) singular."""

    def __init__(self, message: str, *, eigenvalue: float | None = None,
                 sample: int | None = None):
        super().__init__(message)
        self.eigenvalue = eigenvalue
        self.sample = sample


class SaturationError(NumericalError):
    """The tuning density underflowed on too many outputs."""

    def __init__(self, message: str, *, index: tuple[int, int] | None = None):
        super().__init__(message)
        self.index = index


class RankError(NumericalError):
    """Rows that must be linearly independent are not."""

    pass


class StallError(NumericalError):
    """Backtracking exhausted its budget without decreasing the objective."""

    def __init__(self, message: str, *, objective: float):
        super().__init__(message)
        self.objective = objective


class DegenerateError(NumericalError):
    """A distribution or filter has (near) zero spread."""

    pass
