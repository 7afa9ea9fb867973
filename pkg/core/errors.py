"""Exception hierarchy shared by the numerical core, the chain builders and the CLI."""

from typing import Any, Optional


class ObsbError(Exception):
    """Root of every error raised on purpose by this package."""


class InputError(ObsbError, ValueError):
    """Malformed arguments: wrong dimensions, unknown names, out-of-range counts."""


class SpaceMismatchError(InputError):
    """Vectors or operators from different spaces were combined."""


class PreconditionError(ObsbError, ValueError):
    """A mathematical precondition does not hold (f(x) != f(y), y not in K, ...)."""


class DegenerateInputError(PreconditionError):
    """The requested object is undefined for this input (e.g. splitting x - x)."""


class NumericError(ObsbError, RuntimeError):
    """A solver did not converge or returned an unusable answer."""

    def __init__(self, message: str, residual: Optional[float] = None, detail: Optional[dict[str, Any]] = None):
        super().__init__(message)
        self.residual = residual
        self.detail = detail or {}


class ChainConstructionError(InputError):
    """Chain coefficients violate the family's validity conditions."""

    def __init__(self, message: str, violated: Optional[list[int]] = None):
        super().__init__(message)
        self.violated = list(violated or [])


class ScenarioError(InputError):
    """Scenario file could not be parsed or validated."""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None, path: str = ""):
        where = ""
        if line is not None:
            where = f" (line {line}, column {column if column is not None else 1})"
        super().__init__(f"{message}{where}")
        self.line = line
        self.column = column
        self.path = path


__all__ = [
    "ObsbError",
    "InputError",
    "SpaceMismatchError",
    "PreconditionError",
    "DegenerateInputError",
    "NumericError",
    "ChainConstructionError",
    "ScenarioError",
]
