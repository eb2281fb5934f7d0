"""Exception types shared across the package."""

from __future__ import annotations


class ScheduleValidationError(ValueError):
    """A solver parameter inequality is violated.

    ``inequality`` names the condition that failed, e.g. ``"mu0 <= 1/(4*rho0)"``.
    """

    def __init__(self, inequality: str, detail: str = ""):
        self.inequality = inequality
        msg = f"parameter condition violated: {inequality}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class ParseError(ValueError):
    """Malformed input data; carries the 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DivergedError(RuntimeError):
    """Iterates left the trusted region or became non-finite.

    ``last_record`` holds the most recent diagnostic record, if any.
    """

    def __init__(self, message: str, last_record=None):
        self.last_record = last_record
        super().__init__(message)
