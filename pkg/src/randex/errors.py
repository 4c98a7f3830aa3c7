"""Exception types raised across the package.

Statistics that are undefined on a dataset raise typed errors instead of
returning infinities or NaN, so the randomization-test engine can tell an
extreme replicate from an undefined one.
"""


class RandexError(Exception):
    """Base class for all package errors."""


class CapExceeded(RandexError):
    """The number of assignments exceeds the enumeration cap."""


class DegreesOfFreedom(RandexError):
    """Not enough observations for the requested decomposition (N <= J)."""


class ZeroResidual(RandexError):
    """Residual sum of squares is zero; the F ratio is undefined."""


class ZeroGroupVariance(RandexError):
    """A group's sample variance is zero where a positive one is required."""

    def __init__(self, group: int):
        self.group = group
        super().__init__(f"group {group} has zero sample variance")


class GroupTooSmall(RandexError):
    """A group has fewer than two units where a variance is required."""

    def __init__(self, group: int):
        self.group = group
        super().__init__(f"group {group} has fewer than 2 units")


class WrongArity(RandexError):
    """Operation restricted to two-treatment experiments got J != 2."""


class ZeroTotalVariance(RandexError):
    """Total sample variance is zero; the statistic is undefined."""


class DimensionMismatch(RandexError):
    """Potential-outcome table shape does not match the design."""


class NotNeymanNull(RandexError):
    """Population column means differ where equality is required."""


class ZeroVariance(RandexError):
    """A potential-outcome column has zero variance."""


class EigenFailure(RandexError):
    """Eigenvalue iteration did not converge within its budget."""


class UnknownStatistic(RandexError):
    """Unrecognized test-statistic name."""


class UnknownExample(RandexError):
    """Unrecognized built-in dataset name."""


class UnknownScenario(RandexError):
    """Unrecognized simulation-scenario name."""


class InvalidScenario(RandexError):
    """Scenario definition is inconsistent or unusable for the request."""


class DatasetFormatError(RandexError):
    """Input file could not be parsed; carries the offending row number."""

    def __init__(self, message: str, row: int | None = None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
