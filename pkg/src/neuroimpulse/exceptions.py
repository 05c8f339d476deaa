"""Exception hierarchy shared by all submodules."""


class NeuroImpulseError(Exception):
    """Base class for every error raised by this package."""


class NotHurwitz(NeuroImpulseError, ValueError):
    """Lyapunov equation has no positive-definite solution."""


class NotSymmetric(NeuroImpulseError, ValueError):
    pass


class DimensionTooLarge(NeuroImpulseError, ValueError):
    pass


class Infeasible(NeuroImpulseError, ValueError):
    """Right-hand side is not in the conic hull of the columns."""


class NotLinear(NeuroImpulseError, ValueError):
    """The analogue gain ``B Theta^-1 g(x)`` is not a linear map."""


class SingularGram(NeuroImpulseError, ValueError):
    pass


class SteeringFailed(NeuroImpulseError, ValueError):
    pass


class UnsupportedLeak(NeuroImpulseError, ValueError):
    pass


class ZeroInitial(NeuroImpulseError, ValueError):
    pass


class NoEventsEver(NeuroImpulseError, ValueError):
    pass


class StepTooCoarse(NeuroImpulseError, RuntimeError):
    pass


class _WithTrajectory(NeuroImpulseError):
    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class Diverged(_WithTrajectory, RuntimeError):
    """State norm crossed the overflow guard.

    The truncated trajectory up to the guard crossing is kept on
    ``self.trajectory``.
    """


class NoEvent(_WithTrajectory, RuntimeError):
    """No threshold crossing happened on the requested horizon."""
