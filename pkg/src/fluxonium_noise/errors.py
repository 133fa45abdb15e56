"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Invalid user input: bad parameters, malformed files, broken preconditions."""


class DomainError(ValueError):
    """Evaluation requested outside a model's domain of validity."""


class ConvergenceError(RuntimeError):
    """An iterative numerical procedure failed to reach its target accuracy."""


class DegeneracyError(RuntimeError):
    """A perturbative expression was evaluated too close to a level collision."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature could not reach the requested accuracy."""

    def __init__(self, message: str, achieved: float | None = None):
        super().__init__(message)
        self.achieved = achieved


class FitError(RuntimeError):
    """A least-squares fit failed to converge or was structurally degenerate."""


class IdentifiabilityError(FitError):
    """The data cannot constrain one or more fit parameters."""

    def __init__(self, message: str, parameter: str | None = None):
        super().__init__(message)
        self.parameter = parameter
