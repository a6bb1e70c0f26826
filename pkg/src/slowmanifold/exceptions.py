"""Exception types raised across the package."""


class SlowManifoldError(Exception):
    pass


class GridError(SlowManifoldError, ValueError):
    """A time is not aligned with the sampling grid."""


class InsufficientPathError(SlowManifoldError, ValueError):
    """A noise path does not cover the window an evaluation needs."""

    def __init__(self, message, need_before=0.0, need_after=0.0):
        super().__init__(message)
        self.need_before = need_before
        self.need_after = need_after


class DivergentIntegralError(SlowManifoldError, ValueError):
    """A stationary convolution kernel grows backward in time."""


class NumericalFailure(SlowManifoldError, ArithmeticError):
    """Non-finite state or failed fixed-point iteration.

    ``step`` is the time step or iterate index where it happened and
    ``residuals`` the history collected so far (may be empty).
    """

    def __init__(self, message, step=None, residuals=()):
        super().__init__(message)
        self.step = step
        self.residuals = list(residuals)


class ConfigError(SlowManifoldError, ValueError):
    """Invalid experiment configuration; ``key`` names the offending field."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key
