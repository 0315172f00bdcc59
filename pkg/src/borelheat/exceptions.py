"""Exception hierarchy.

Input problems derive from :class:`InputError` (CLI exit code 2); numerical
breakdowns derive from :class:`NumericalError` (CLI exit code 3).
"""


class BorelHeatError(Exception):
    """Base class for all package errors."""


class InputError(BorelHeatError, ValueError):
    """Malformed or out-of-range input."""


class NumericalError(BorelHeatError, ArithmeticError):
    """A numerical stage failed to produce a trustworthy result."""


# model
class SymmetryViolation(InputError):
    pass


class NonPositiveGroundState(InputError):
    pass


class MissingDerivative(InputError):
    pass


class NormalizationDivergent(NumericalError):
    pass


class ExpressionError(InputError):
    """Expression outside the whitelist grammar."""


# coeffs
class FitDiverged(NumericalError):
    pass


class DegreeOverflow(NumericalError):
    pass


class OrderOutOfRange(InputError, IndexError):
    pass


class AllZero(NumericalError):
    """Every coefficient in the fit window vanishes."""


# borel
class DegenerateHankel(NumericalError):
    pass


class PoleOnContour(NumericalError):
    pass


# kernels
class MassLoss(NumericalError):
    pass


# lamperti
class NonPositiveSigma(InputError):
    pass


class OutOfImage(InputError):
    pass
