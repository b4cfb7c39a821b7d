"""Exception and warning types shared across the package."""


class CrtLogitError(Exception):
    """Base class for all package-specific errors."""


class InvalidInputError(CrtLogitError, ValueError):
    """Raised when input data violates a documented precondition."""


class DegenerateWeightsError(CrtLogitError):
    """All curvature weights are numerically zero: every prediction is saturated."""


class DegenerateFisherInfoError(CrtLogitError):
    """Partial Fisher information is not positive; the test statistic is undefined."""


class DegenerateResidualError(CrtLogitError):
    """A residual vector has numerically zero norm, so the statistic is undefined."""


class NonFiniteError(CrtLogitError):
    """An intermediate quantity overflowed or produced NaN."""


class SplitError(CrtLogitError):
    """A train/test split left one side without both response classes."""


class CholeskyError(CrtLogitError):
    """Covariance factorization failed (matrix not positive definite)."""


class NonConvergenceWarning(UserWarning):
    """Solver hit its iteration cap; the result is returned but flagged."""
