"""Exception hierarchy; the CLI maps these onto exit statuses."""


class ShadowshiftError(Exception):
    """Base class for library errors."""


class WeightSpecError(ShadowshiftError, ValueError):
    """Malformed weight description."""


class ClassificationError(ShadowshiftError):
    """An operation needs a shadowing class the weights do not have."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class TrajectoryError(ShadowshiftError, ValueError):
    """Malformed or inconsistent pseudotrajectory."""


class BudgetExceededError(ShadowshiftError):
    """A perturbation is too large for the conjugacy construction."""


class ConvergenceError(ShadowshiftError):
    """An iterative solve did not reach its tolerance."""
