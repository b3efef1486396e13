"""Exception types raised across the package."""


class SspError(Exception):
    """Base class for package errors."""


class ValidationError(SspError, ValueError):
    """An MDP violates a model invariant (probability sum, cost sign, ...)."""


class ParseError(SspError, ValueError):
    """Malformed flat MDP text. ``lineno`` is 1-based."""

    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class DivergentValue(SspError, ArithmeticError):
    """The value of a relevant state is infinite or exceeded the value cap."""

    def __init__(self, message: str, state: int | None = None):
        self.state = state
        super().__init__(message)


class InvalidSpec(SspError, ValueError):
    """Generator parameters are out of range."""


class Unsatisfiable(SspError):
    """A generator request cannot be met (e.g. too few states at any depth)."""
