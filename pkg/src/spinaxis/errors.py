"""Exception types shared across the package."""


class SpinAxisError(Exception):
    """Base class for errors raised by this package."""


class NotSkewError(SpinAxisError):
    """Matrix passed to vee() is not skew-symmetric within tolerance."""


class NoConvergenceError(SpinAxisError):
    """Implicit solve inside the attitude integrator failed to converge."""


class InvalidEquilibriumError(SpinAxisError):
    """Linearization requested at a point that is not a closed-loop equilibrium."""


class SingularSystemError(SpinAxisError):
    """Undamped phase portrait with nonzero torque has no finite steady state."""


class ParseError(SpinAxisError):
    """Scenario document could not be parsed."""


class ValidationError(SpinAxisError):
    """Scenario or input violates a documented invariant."""


class MismatchedScenariosError(SpinAxisError):
    """Scenarios handed to compare() do not share initial/desired attitudes."""
