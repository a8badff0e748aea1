from typing import Any


class BelltimeError(Exception):
    """Root of every error raised by the toolkit."""


class ValidationError(BelltimeError, ValueError):
    """Malformed input: non-unit vectors, inverted boxes, wrong shapes."""


class DomainError(BelltimeError, ValueError):
    """A parameter lies outside the mathematical domain of an operation."""


class CapacityError(BelltimeError):
    """A request exceeds a hard size cap (LP vertices, Wick order, moment order)."""


class ModelContractError(BelltimeError):
    """A hidden-variable response left the interval [-1, 1] during sampling."""


class PreconditionError(BelltimeError):
    """The hypotheses of a construction do not hold for the given inputs."""


class NumericalError(BelltimeError):
    """Quadrature or LP failure. `diagnostics` carries solver output."""

    def __init__(self, message: str, diagnostics: dict[str, Any] | None = None) -> None:
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class UsageError(BelltimeError):
    """Bad command-line or config-file input."""
