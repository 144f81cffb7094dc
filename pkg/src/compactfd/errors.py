"""Exception hierarchy shared by all modules."""


class CompactFDError(Exception):
    """Base class for every error raised by this package."""


class UsageError(CompactFDError, ValueError):
    """Bad arguments: mismatched jets, unknown names, out-of-range orders."""


class ParseError(UsageError):
    """Syntax error in an expression string."""

    def __init__(self, message, position):
        super().__init__(f"{message} at offset {position}")
        self.position = position


class NumericalError(CompactFDError, ArithmeticError):
    """Numerical or validation failure (CLI exit code 2)."""


class DomainError(NumericalError):
    """Scalar evaluation outside a function's domain (ln of 0, 1/0, ...)."""


class SingularityError(NumericalError):
    """Jet operation at a singular point, or a nonpositive coefficient ``a``."""

    def __init__(self, message, point=None):
        if point is not None:
            message = f"{message} (at {point})"
        super().__init__(message)
        self.point = point


class ValidationError(NumericalError):
    """Problem data failed a sampled validity check."""


class ConstancyGateError(NumericalError):
    """The 2D sixth-order scheme refused a coefficient that is not admissible."""

    def __init__(self, message, spread):
        super().__init__(message)
        self.spread = spread


class DefinitenessError(NumericalError):
    """A matrix expected to be SPD showed a nonpositive pivot or curvature."""


class ConvergenceError(NumericalError):
    """An iterative solve hit its iteration cap; ``report`` has the best iterate."""

    def __init__(self, message, report):
        super().__init__(message)
        self.report = report
