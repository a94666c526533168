"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class QuadratureError(RuntimeError):
    """Quadrature did not converge within its evaluation budget.

    The best available estimate is kept on ``best`` so callers can decide
    whether it is still usable.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class StabilityError(ValueError):
    """An explicit time step violates the stability bound of the scheme."""
