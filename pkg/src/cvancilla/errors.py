"""Exception types raised by the library.

Everything derives from ``ValueError`` so callers that only care about bad
input can catch that; the CLI distinguishes :class:`NumericalError`
subclasses (exit code 3) from plain usage errors (exit code 2).
"""


class NumericalError(ValueError):
    """Base class for failures caused by numerical limits rather than bad usage."""


class UnsupportedOrderError(NumericalError):
    pass


class TurningPointError(ValueError):
    pass


class RuleMismatchError(ValueError):
    pass


class SupportError(NumericalError):
    """A grid does not contain the support of the state it should hold."""


class DegenerateError(NumericalError):
    """The requested state or outcome has zero weight."""


class ConventionError(ValueError):
    pass


class NonSymplecticError(ValueError):
    pass


class TruncationError(NumericalError):
    pass
