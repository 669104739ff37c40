"""Exception hierarchy for tvcspec.

Every failure mode raised by the library derives from :class:`TvcspecError`
so callers can catch library errors without masking programming mistakes.
"""


class TvcspecError(Exception):
    """Base class for all tvcspec errors."""


class BadSizeError(TvcspecError, ValueError):
    """Sample too small for the requested operation."""


class BadRangeError(TvcspecError, ValueError):
    """Degenerate or reversed numeric range (bandwidths, integration limits)."""


class SingularDesignError(TvcspecError):
    """The local design matrix is numerically singular at some time point.

    Signals that the bandwidth is too small or the regressors are degenerate
    inside a kernel window.  No silent regularization is applied.
    """

    def __init__(self, t, condition=None):
        self.t = float(t)
        self.condition = condition
        detail = f" (condition {condition:.3e})" if condition is not None else ""
        super().__init__(f"singular local design at t={self.t:.6g}{detail}")


class AllSingularError(TvcspecError):
    """Every candidate bandwidth produced a singular design."""


class ZeroResidualError(TvcspecError):
    """The alternative fit is perfect (RSS = 0); the statistic is undefined."""


class FamilyFitError(TvcspecError):
    """The parametric null family could not be fitted (singular design)."""


class BadWindowError(TvcspecError, ValueError):
    """Lag window wider than the sample."""


class EmptyWeightError(TvcspecError):
    """Some evaluation point received zero total kernel weight."""


class NotSymmetricError(TvcspecError, ValueError):
    """Matrix expected to be symmetric is not."""


class BadDrawCountError(TvcspecError, ValueError):
    """Too few bootstrap draws requested."""


class NoRateFormError(TvcspecError, ValueError):
    """The bandwidth grid lacks the (gamma, c_min, c_max) rate form."""


class NonpositiveError(TvcspecError, ValueError):
    """An argument required to be strictly positive is not."""
