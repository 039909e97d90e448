"""Exception hierarchy shared by every module.

Each class carries the process exit code the command-line front end maps it to.
"""

from __future__ import annotations


class WarpballError(Exception):
    """Base class for all library errors."""

    exit_code = 1
    kind = "error"

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_dict(self) -> dict:
        out = {"error": self.kind, "message": self.message}
        out.update({k: v for k, v in self.details.items() if v is not None})
        return out


class ConfigError(WarpballError):
    """Malformed or incomplete run configuration. ``field`` is a dotted path."""

    exit_code = 2
    kind = "config_error"

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message, field=field)
        self.field = field


class ValidationError(WarpballError):
    exit_code = 3
    kind = "validation_error"


class ModelError(WarpballError):
    exit_code = 3
    kind = "model_error"


class DomainError(WarpballError):
    exit_code = 4
    kind = "domain_error"


class GammaPoleError(DomainError):
    kind = "gamma_pole"

    def __init__(self, message: str, nearest: int):
        super().__init__(message)
        self.details["nearest"] = nearest
        self.nearest = nearest


class PoleProximityError(DomainError):
    kind = "pole_proximity"


class NumericError(WarpballError):
    exit_code = 5
    kind = "numeric_error"


class DivergenceError(NumericError):
    kind = "divergence"


class ResolutionError(NumericError):
    kind = "resolution"


class PrecisionError(NumericError):
    kind = "precision"


class BoundaryTooCloseError(NumericError):
    """A zero sits too close to a contour; ``hint`` suggests where to move it."""

    kind = "boundary_too_close"

    def __init__(self, message: str, hint: complex | None = None):
        super().__init__(message, hint=None if hint is None else [hint.real, hint.imag])
        self.hint = hint


class DataError(NumericError):
    kind = "data_error"
