"""Exception types shared across the solvers."""


class ScalingError(Exception):
    """Base class for all framescale errors."""


class FactorizationFailure(ScalingError):
    """A Gram or projector matrix was numerically singular."""


class NotSymmetric(ScalingError):
    """Input matrix asymmetry exceeds tolerance."""


class DegenerateMargin(ScalingError):
    """Margin selection found a zero gap on a nonzero error vector."""


class IterationCapExceeded(ScalingError):
    """An iterative loop ran past its safety cap.

    Signals numerical breakdown rather than a slow instance; the trace
    collected so far is attached when available.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class DerivativeVanished(ScalingError):
    """Newton step impossible: derivative at the current iterate is ~0."""


class GuessPreconditionViolated(ScalingError):
    """Entered the eigenvalue-sum guess branch outside its validity range."""


class PreconditionViolated(ScalingError):
    """An operation was called on inputs outside its contract."""


class InfeasibleSegment(ScalingError):
    """Piecewise-linear step-size solve has no finite solution."""


class ZeroRowSum(ScalingError):
    """A matrix row has zero weighted sum under the current column scaling."""


class NotSeparable(ScalingError):
    """Every parallel perceptron instance exceeded its update budget."""
