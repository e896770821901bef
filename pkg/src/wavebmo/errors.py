"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the set where the operation is defined."""


class ResolutionError(DomainError):
    """A dyadic interval is too short to be resolved on the working grid."""


class DegenerateWeightError(DomainError):
    """A weight vanishes (or is negative) where a positive value is needed."""


class PreconditionError(ValueError):
    """Caller-side contract violated (bad coefficients, non-nested families, ...)."""


class DivergenceError(ArithmeticError):
    """An improper integral has no usable tail bound."""


class TruncationError(DomainError):
    """A dilated interval escapes the window.

    ``largest_feasible`` is the largest dilation exponent that still fits.
    """

    def __init__(self, message: str, largest_feasible: int):
        super().__init__(message)
        self.largest_feasible = largest_feasible
