"""Exception hierarchy shared by all modules."""


class DmtError(Exception):
    """Base class for every error raised by dmtkit."""


class InvalidSpecError(DmtError, ValueError):
    """A channel description violates its structural invariants."""


class DomainError(DmtError, ValueError):
    """An argument lies outside the domain where a formula is defined.

    ``definition`` names the multiplexing-gain definition (or formula) whose
    domain was violated, when there is one.
    """

    def __init__(self, message, definition=None):
        super().__init__(message)
        self.definition = definition


class BoundInvalidError(DomainError):
    """The exponential outage bound was requested with a rate above the mean."""


class NumericalDomainError(DmtError, ArithmeticError):
    """A closed form hit a non-representable intermediate (e.g. log of <= 0)."""
