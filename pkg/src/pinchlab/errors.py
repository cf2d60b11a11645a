"""Exception hierarchy shared by all pinchlab modules."""


class PinchlabError(Exception):
    """Base class for every error raised by pinchlab."""


class InvalidInput(PinchlabError, ValueError):
    pass


class InvalidDimension(InvalidInput):
    pass


class InvalidPinchingConstant(InvalidInput):
    """Raised when n*c0 <= 1, where the reaction expansions divide by n*c0 - 1."""


class PinchingTooWeak(InvalidInput):
    pass


class MeanCurvatureVanishes(PinchlabError):
    """|H| is below the decomposition threshold; the principal normal is undefined."""


class ZeroSff(PinchlabError):
    pass


class PreconditionViolated(PinchlabError):
    pass


class PinchingViolated(PreconditionViolated):
    pass


class CodazziViolation(PreconditionViolated):
    pass


class ConvexPoint(PreconditionViolated):
    """lambda_1 > -eps0 * H: the non-convexity hypothesis of the gradient bound fails."""


class NonFiniteQuantity(PinchlabError):
    pass


class StepSizeUnderflow(PinchlabError):
    pass


class CflViolation(PinchlabError):
    pass


class ProfilePinchoff(PinchlabError):
    """The profile radius reached the pinch threshold (expected terminal state)."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class _MonitorStop(PinchlabError):
    """A monitor stopped early; ``series`` holds the records gathered so far."""

    def __init__(self, message, series=None):
        super().__init__(message)
        self.series = series


class PinchingLost(_MonitorStop):
    pass


class MeanConvexityLost(_MonitorStop):
    pass


class EntropyBoundViolated(PinchlabError):
    pass


class ConfigInvalid(PinchlabError):
    pass


class IoFailure(PinchlabError):
    pass
