"""Exception types raised across the library.

Every error derives from :class:`PerpetualPutError` so callers can catch the
whole family with one clause; the CLI maps them to exit codes.
"""


class PerpetualPutError(Exception):
    """Base class for all library errors."""


class InvalidParams(PerpetualPutError):
    """A market, model or configuration parameter violates its constraints."""


# --- numerics ---------------------------------------------------------------

class NoSignChange(PerpetualPutError):
    """Root bracket endpoints do not straddle a sign change."""


class MaxIterExceeded(PerpetualPutError):
    """Iteration budget exhausted before the requested tolerance was met."""


class MaxSubdivisions(PerpetualPutError):
    """Adaptive quadrature ran out of subdivision depth or node budget."""


class NonFiniteIntegrand(PerpetualPutError):
    """Integrand returned NaN or infinity."""


class StepUnderflow(PerpetualPutError):
    """ODE step size shrank below floating-point resolution."""


class StopNeverReached(PerpetualPutError):
    """ODE stop condition did not trigger before the integration limit."""


# --- volatility -------------------------------------------------------------

class NonPositiveAsset(PerpetualPutError):
    """Asset price argument must be strictly positive."""


class NonPositiveGamma(PerpetualPutError):
    """Scaled-gamma argument must be strictly positive."""


class NegativeArgument(PerpetualPutError):
    """Argument outside the nonnegative domain of the preference function."""


class InversionFailed(PerpetualPutError):
    """Monotone inversion failed; the volatility model is likely ill-posed."""


# --- merton / solver ---------------------------------------------------------

class NotSIndependent(PerpetualPutError):
    """Operation requires a volatility model that ignores the asset price."""


class NoRoot(PerpetualPutError):
    """A scalar equation has no root in the searched interval."""


class BracketExpansionFailed(PerpetualPutError):
    """Geometric bracket expansion never produced a sign change."""


class HorizonExceeded(PerpetualPutError):
    """Trajectory left the configured integration horizon before decaying."""
