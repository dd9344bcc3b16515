"""
Exceptions raised by the library, each mapped to a CLI exit code.
"""


class OieError(Exception):
    exit_code = 1

    def __init__(self, message: str, *, detail: str | None = None):
        super().__init__(message)
        self.message = message
        self.detail = detail

    def __str__(self) -> str:
        if self.detail:
            return f"{self.message} ({self.detail})"
        return self.message


class UsageError(OieError):
    exit_code = 2


class InputSchemaError(OieError):
    exit_code = 3


class NumericalError(OieError):
    exit_code = 4


class MissingInputError(OieError):
    exit_code = 5


class DomainError(UsageError, ValueError):
    """A numeric precondition does not hold (negative deviation, t outside the trial...)."""


class FitError(NumericalError, ValueError):
    """Degenerate design in a regression or normalisation."""
