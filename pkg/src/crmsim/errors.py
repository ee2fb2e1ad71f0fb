"""Exception hierarchy for crmsim.

Everything numerical raises a subclass of :class:`CrmError` so callers (and
the CLI) can distinguish usage problems from genuine numerical failures.
"""


class CrmError(Exception):
    """Base class for all crmsim errors."""


class ParameterError(CrmError, ValueError):
    """A process or configuration parameter is outside its valid range."""


class DomainError(CrmError, ValueError):
    """An intensity was evaluated outside the interior of its domain."""


class DecompositionMismatchError(CrmError):
    """The supplied power-law decomposition does not reproduce the intensity."""


class MissingDecompositionError(CrmError):
    """The mixed quadrature rule was requested without a decomposition."""


class NonIntegrableTailError(CrmError):
    """The tail mass does not fall below the requested threshold."""


class TailDetectionError(CrmError):
    """No candidate tail point matched an exponential or polynomial model."""


class MassExhaustedError(CrmError):
    """An arrival time exceeds the total mass of a finite-activity intensity."""


class QuadratureConvergenceError(CrmError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class BracketError(CrmError):
    """Root bracketing failed while inverting a tail mass function."""


class DegenerateDensityError(CrmError):
    """A posterior density evaluated to zero on the whole grid."""
