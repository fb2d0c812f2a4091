"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Raised when an input violates a documented precondition or invariant."""


class NumericalFailure(RuntimeError):
    """Raised when an integration or quadrature degrades beyond its tolerance.

    The message states what drifted and, where applicable, suggests a remedy
    (usually a smaller time step).
    """
