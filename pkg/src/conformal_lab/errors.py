"""Exception hierarchy.

Every error carries an ``exit_code`` used by the command line front end:
2 for violated preconditions, 3 for budget or convergence failures.
"""


class ConformalLabError(Exception):
    exit_code = 2


class ExpressionSyntaxError(ConformalLabError, SyntaxError):
    def __init__(self, message, offset):
        self.offset = offset
        super().__init__(f"{message} at offset {offset}")


class UnknownIdentifier(ConformalLabError, NameError):
    def __init__(self, name, offset=None):
        super().__init__(f"unknown identifier {name!r}")
        self.name = name
        self.offset = offset


class DomainError(ConformalLabError, ArithmeticError):
    """A sub-expression was evaluated outside its domain (log, sqrt, division)."""


class OrderTooLarge(ConformalLabError, ValueError):
    pass


class OrderTooLow(ConformalLabError, ValueError):
    pass


class NonpositiveConformalFactor(ConformalLabError, ValueError):
    pass


class DegenerateTangent(ConformalLabError, ValueError):
    pass


class OutsideCollar(ConformalLabError, ValueError):
    pass


class NotConstantOnBoundary(ConformalLabError, ValueError):
    pass


class BoundaryJetNotFlat(ConformalLabError, ValueError):
    def __init__(self, order, residual):
        self.order = order
        self.residual = residual
        super().__init__(f"normal derivative of order {order} does not vanish on the boundary "
                         f"(max residual {residual:.3e})")


class FieldVanishesOnCurve(ConformalLabError):
    def __init__(self, location, magnitude):
        self.location = tuple(float(c) for c in location)
        self.magnitude = float(magnitude)
        super().__init__(f"field vanishes on the curve near ({self.location[0]:.6g}, "
                         f"{self.location[1]:.6g}), |V| = {self.magnitude:.3e}")


class NonIsolatedZeros(ConformalLabError):
    pass


class BudgetExceeded(ConformalLabError):
    exit_code = 3


class DegreeMismatch(ConformalLabError):
    exit_code = 3


class UnguaranteedInput(ConformalLabError, ValueError):
    pass


class NotSymplecticAtProbe(ConformalLabError, ValueError):
    pass


class NewtonDivergence(ConformalLabError):
    exit_code = 3

    def __init__(self, message, location=None):
        self.location = location
        super().__init__(message)


class ClosednessViolation(ConformalLabError):
    pass


class BoundaryIdentityViolation(ConformalLabError):
    pass


class DegenerateDenominator(ConformalLabError, ZeroDivisionError):
    pass


class StepFailure(ConformalLabError):
    exit_code = 3


class SeamZero(ConformalLabError):
    pass


class NotModerate(ConformalLabError):
    pass


class NotIdentityOnBoundary(ConformalLabError, ValueError):
    pass
