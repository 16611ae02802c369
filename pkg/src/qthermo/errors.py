"""Exception hierarchy shared by every layer of the package."""


class QThermoError(Exception):
    """Base class for all package errors."""


class DomainError(QThermoError, ValueError):
    """An argument lies outside the domain of the operation."""


class IntegratorError(QThermoError, ArithmeticError):
    """The fixed-step integrator cannot meet its accuracy contract."""


class InvariantViolation(QThermoError, RuntimeError):
    """A physical invariant (closure, positivity, equality) failed at runtime.

    ``invariant`` names the violated check so callers can report it.
    """

    def __init__(self, invariant, message):
        super().__init__(f"{invariant}: {message}")
        self.invariant = invariant
