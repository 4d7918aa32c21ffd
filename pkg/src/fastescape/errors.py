"""Exception hierarchy shared by all modules."""


class EscapeLabError(Exception):
    """Base class for every error raised by fastescape."""


class DomainError(EscapeLabError, ValueError):
    """A field was evaluated where it is not defined (non-finite output)."""


class HypothesisViolated(EscapeLabError):
    """The speed bound 0 < c1 <= |v| fails on the working disk."""


class NumericalFailure(EscapeLabError):
    """Base class for integrator and grid failures."""


class StagnationError(NumericalFailure):
    """The field speed dropped below the integrator's speed floor."""


class StiffnessError(NumericalFailure):
    """The adaptive step size underflowed."""


class IncompressibilityError(NumericalFailure):
    """Staircase path integration did not close; the field is not divergence free."""


class DegenerateLevelError(NumericalFailure):
    """No usable level set was found during a level scan."""


class ConsistencyError(NumericalFailure):
    """A planner leg exceeded the length the construction guarantees."""


class ExpressionError(EscapeLabError, ValueError):
    """Base class for stream-function expression errors."""


class ParseError(ExpressionError):
    """Syntax error with byte offset and the set of expected tokens."""

    def __init__(self, message, offset, expected=()):
        self.offset = offset
        self.expected = tuple(expected)
        detail = f"{message} at offset {offset}"
        if self.expected:
            detail += f" (expected {', '.join(self.expected)})"
        super().__init__(detail)


class UnknownIdentifierError(ExpressionError):
    def __init__(self, name, offset=None):
        self.name = name
        self.offset = offset
        where = "" if offset is None else f" at offset {offset}"
        super().__init__(f"unknown identifier {name!r}{where}")


class NonDifferentiableError(ExpressionError):
    """Raised when differentiating through abs()."""
