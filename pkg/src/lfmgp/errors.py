"""Exception types shared across the library."""


class LfmgpError(Exception):
    """Base class for all library-specific errors."""


class RangeOverflowError(LfmgpError):
    """A special-function value exceeds the representable floating range.

    Raised instead of silently returning inf, which would corrupt Gram
    matrices invisibly.
    """


class DegenerateKernelError(LfmgpError):
    """Kernel hyperparameters hit an excluded degenerate configuration,
    e.g. a critically damped second-order system whose closed form divides
    by zero."""


class NotPositiveDefiniteError(LfmgpError):
    """Covariance matrix failed factorization even at the maximum jitter
    level; signals pathological hyperparameters."""


class UnsupportedFamilyError(LfmgpError):
    """Operation requested for a kernel family that does not define it
    (e.g. latent-force posterior for a coregionalization baseline)."""


class DataError(LfmgpError):
    """Malformed input data; carries file/row context where available."""


class ConfigError(LfmgpError):
    """Invalid experiment configuration."""


class QuadratureBudgetError(LfmgpError):
    """Adaptive quadrature did not reach the requested tolerance within
    its evaluation budget.  The best estimate is attached."""

    def __init__(self, message, value=None, error_estimate=None):
        super().__init__(message)
        self.value = value
        self.error_estimate = error_estimate
