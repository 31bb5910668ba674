"""Exception types shared across the toolkit."""


class ShapeError(ValueError):
    """An array argument has the wrong shape; the message carries the shape report."""


class EvaluationError(ArithmeticError):
    """A user-supplied map returned NaN/inf.

    ``component`` is the index of the first offending entry, ``where`` names
    the map that produced it.
    """

    def __init__(self, message, component=None, where=None):
        super().__init__(message)
        self.component = component
        self.where = where


class DesignError(ValueError):
    """A controller design input is inadmissible (bad poles, non-Hurwitz matrix, ...)."""


class NewtonError(RuntimeError):
    """The implicit feedback solve failed to converge at some state.

    Carries the state, the last residual norm and the iteration count so a
    failure can be interpreted as the state leaving the controller's domain
    of validity.
    """

    def __init__(self, message, x=None, residual=None, iterations=None,
                 singular=False):
        super().__init__(message)
        self.x = x
        self.residual = residual
        self.iterations = iterations
        self.singular = singular


class QuadratureBudgetError(RuntimeError):
    """Adaptive quadrature hit its refinement budget before reaching the tolerance.

    ``estimate`` is the best available value, ``error_bound`` the last
    observed refinement difference.
    """

    def __init__(self, message, estimate=None, error_bound=None):
        super().__init__(message)
        self.estimate = estimate
        self.error_bound = error_bound


class IntegrationError(RuntimeError):
    """Time integration failed (step underflow or non-finite state).

    ``t_last``/``x_last`` hold the last accepted point.
    """

    def __init__(self, message, t_last=None, x_last=None, reason=None):
        super().__init__(message)
        self.t_last = t_last
        self.x_last = x_last
        self.reason = reason


class ControllerEvaluationError(IntegrationError):
    """A closed-loop run aborted because the feedback solve failed mid-trajectory."""

    def __init__(self, message, t=None, x=None, residual=None):
        super().__init__(message, t_last=t, x_last=x, reason="controller")
        self.t = t
        self.x = x
        self.residual = residual


class EnvelopeFitError(RuntimeError):
    """Decay-envelope fitting rejected the data; ``mu`` is the (non-positive) fitted rate."""

    def __init__(self, message, mu=None):
        super().__init__(message)
        self.mu = mu


class ScenarioError(ValueError):
    """A scenario document failed validation; ``field`` is the offending field path."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field
