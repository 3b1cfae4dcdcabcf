"""Error taxonomy shared across the package.

Four kinds of failure, so callers (and the CLI exit-code mapping) can tell
bad arguments apart from bad files apart from numerical blowups.
"""


class InputError(ValueError):
    """An argument violates a precondition (bad shape, range, or combination)."""


class ParseError(ValueError):
    """A file could not be parsed. Carries a 1-based line number when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ValidationError(ValueError):
    """Configuration rejected before any work started (unknown key, bad value)."""


class NumericError(ArithmeticError):
    """A computation produced a non-finite value. Carries context when known."""
