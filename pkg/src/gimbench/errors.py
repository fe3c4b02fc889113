"""Exception and warning types raised across the testbench."""


class GimbenchError(Exception):
    """Base class for model and pipeline errors."""


class InfeasibleCommandError(GimbenchError, ValueError):
    """A drive command would push a piezo voltage outside the bias rail."""


class DivergenceError(GimbenchError, RuntimeError):
    """The gimbal angle left the model's validity envelope (|theta| > pi/2)."""


class FitError(GimbenchError, ValueError):
    """A regression or decay fit was given degenerate or unsuitable data."""


class TrimError(GimbenchError, RuntimeError):
    """Trim search did not converge; ``best`` holds the best point seen."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class ConfigError(GimbenchError, ValueError):
    """Scenario configuration is missing, malformed, or violates invariants."""


class NonlinearityWarning(UserWarning):
    """Static deflection falls outside the small-angle envelope."""
