"""Exception hierarchy.

``NumericalError`` subclasses are the failures the CLI reports with exit
code 3; plain ``ValueError`` is used for bad input.
"""


class NumericalError(ArithmeticError):
    """A well-posed request that the numerics could not satisfy."""


class PoleError(NumericalError):
    """A Bessel quotient denominator vanished (within 1e-12)."""


class RootNotFoundError(NumericalError):
    """No sign change of the residual in the requested domain."""


class PoleDenseError(NumericalError):
    """The scan grid cannot separate the poles of the residual."""


class BucklingError(NumericalError):
    """Compression exceeds the clamped buckling load of the tracked mode."""


class ResonanceUnreachableError(NumericalError):
    """The target frequency cannot be reached inside the admissible range."""
