"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: parameter problems are usage
errors (2), malformed input files are data errors (3), and quadrature /
embedding / solver breakdowns are numerical failures (4).
"""


class GwmError(Exception):
    """Base class for all errors raised by this package."""


class ModelParamError(GwmError, ValueError):
    """Model parameters outside their admissible domain."""


class InfiniteVarianceError(ModelParamError):
    """Variance requested for a parameter set with alpha*gamma <= n/2."""


class DataFormatError(GwmError, ValueError):
    """Input data file malformed or failing validation."""


class NumericalError(GwmError, RuntimeError):
    """Quadrature, embedding, factorization, or optimizer failure."""
