"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of a formula."""


class DegenerateHyperplaneError(DomainError):
    """The flat hyperplane (lambda = r = 0) has no finite Euclidean radius."""


class DivergenceError(DomainError):
    """An improper integral or expectation diverges for the given parameters."""


class UnsupportedDimensionError(ValueError):
    """The operation is only implemented for some dimensions."""


class ConvergenceError(ArithmeticError):
    """A numerical routine hit its iteration budget before converging.

    ``partial`` carries whatever result was available when it gave up.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial
