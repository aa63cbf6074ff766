"""Exception and warning types shared across the package.

The CLI maps these onto process exit codes: argument/config problems exit
with 2, model-evaluation failures with 3, and violated mathematical
assumptions with 4.
"""


class InvMeasureError(Exception):
    """Base class for all package errors."""


class ArgumentError(InvMeasureError, ValueError):
    """An argument violates a documented precondition."""


class DomainMembershipError(ArgumentError):
    """A point that must lie inside the parameter box does not."""


class GdViolationError(InvMeasureError):
    """An analytic map's Jacobian is rank-deficient (outputs not
    geometrically distinct)."""


class StiffnessError(InvMeasureError):
    """Adaptive step size underflowed; the problem is too stiff for the
    explicit integrator."""


class DivergenceError(InvMeasureError):
    """The ODE state or right-hand side became non-finite."""


class DensityError(InvMeasureError):
    """A sampling density is invalid (non-positive somewhere, exceeds its
    stated bound, or rejection sampling stalls)."""


class EmptyDensityError(InvMeasureError):
    """No output samples landed inside the partition box."""


class AssumptionError(InvMeasureError):
    """The inner-cell condition needed for the error bounds fails for one
    or more supported bins. ``bins`` lists the offending 1-based bin ids."""

    def __init__(self, message, bins=()):
        super().__init__(message)
        self.bins = tuple(bins)


class EmptyCoverageError(InvMeasureError):
    """An event contains no sample point, so it has no cell-union
    representative."""


class LostMassWarning(UserWarning):
    """Output-density mass sits in bins containing no samples."""

    def __init__(self, message, bins=(), mass=0.0):
        super().__init__(message)
        self.bins = tuple(bins)
        self.mass = float(mass)


class OutsideMassWarning(UserWarning):
    """A fraction of output samples fell outside the partition box."""

    def __init__(self, message, fraction=0.0):
        super().__init__(message)
        self.fraction = float(fraction)
