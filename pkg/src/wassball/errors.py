"""Exception hierarchy shared by every module."""


class WassballError(Exception):
    """Base class for all library errors."""


class InputError(WassballError, ValueError):
    """Invalid user input: malformed measures, mismatched dimensions, bad files."""


class ParseError(InputError):
    """Syntax error in an objective expression; carries the offending position."""

    def __init__(self, message: str, position: int, source: str = ""):
        self.position = position
        self.source = source
        super().__init__(f"{message} at position {position}")


class DomainError(WassballError, ArithmeticError):
    """Objective evaluation left the real domain (log of nonpositive, 0 division, ...)."""


class ContractViolation(WassballError, AssertionError):
    """A postcondition or precondition on solver output does not hold."""


class SolverError(WassballError, RuntimeError):
    """Iteration cap reached or a numerical breakdown inside an LP solve."""


class DiagnosticError(WassballError, RuntimeError):
    """A numeric probe produced no usable data (e.g. every sample was discarded)."""
