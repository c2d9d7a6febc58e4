"""Exception hierarchy shared by the library and the CLI.

The CLI maps these onto exit codes: usage/parameter/domain errors exit 2,
hypothesis violations exit 3, capacity or infeasibility exit 4.
"""


class PDFactorsError(Exception):
    exit_code = 1


class ParameterError(PDFactorsError, ValueError):
    """A model parameter (theta, k, tau, ...) is out of range."""

    exit_code = 2


class DomainError(PDFactorsError, ValueError):
    """An argument lies outside the domain of a function."""

    exit_code = 2


class UsageError(PDFactorsError, ValueError):
    exit_code = 2


class HypothesisError(PDFactorsError, ValueError):
    """An interval family violates b_1 + ... + b_k < 1 (or alpha + beta = 1 - theta)."""

    exit_code = 3


class CapacityError(PDFactorsError, RuntimeError):
    """A requested size exceeds the table capacity."""

    exit_code = 4


class InfeasibleError(CapacityError):
    """Rejection sampling accepts too rarely to be practical."""

    exit_code = 4
