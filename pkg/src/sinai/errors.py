"""Exception types raised across the package."""


class SinaiError(Exception):
    pass


class InvalidRange(SinaiError, ValueError):
    pass


class InvalidLaw(SinaiError, ValueError):
    pass


class OutOfWindow(SinaiError, IndexError):
    pass


class WindowExhausted(SinaiError):
    """The walk left the sampled environment window.

    ``steps`` is the step count at which it left; rerun with a wider window
    and the same seed.
    """

    def __init__(self, msg, steps=None):
        super().__init__(msg)
        self.steps = steps


class NotAValley(SinaiError, ValueError):
    pass


class NoRefinement(SinaiError):
    pass


class InsufficientHorizon(SinaiError):
    pass


class HorizonExceeded(SinaiError):
    pass


class DomainError(SinaiError, ValueError):
    pass


class AllDiscarded(SinaiError):
    pass


class StepBudgetExceeded(SinaiError):
    pass
