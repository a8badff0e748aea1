from dataclasses import dataclass, field
from typing import Self

import numpy as np
import numpy.typing as npt

from src.common.errors import ValidationError


@dataclass(frozen=True)
class CorrelationMatrix:
    """Target correlations P_ij = E f_i g_j, optionally tagged with the generating angles."""

    entries: npt.NDArray[np.float64]
    alphas: tuple[float, ...] | None = None
    betas: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        entries = np.array(self.entries, dtype=float)
        if entries.ndim != 2 or 0 in entries.shape:
            raise ValidationError(f"correlation matrix must be 2-D and non-empty, got {entries.shape}")
        if not np.all(np.isfinite(entries)) or np.max(np.abs(entries)) > 1.0 + 1e-12:
            raise ValidationError("correlation entries must be finite with |P_ij| <= 1")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape  # type: ignore[return-value]


@dataclass(frozen=True, order=True)
class DeterministicStrategy:
    """A vertex of the local polytope: responses s_i for side A, t_j for side B."""

    s: tuple[int, ...]
    t: tuple[int, ...]

    def __post_init__(self) -> None:
        if any(v not in (-1, 1) for v in self.s + self.t):
            raise ValidationError(f"strategy components must be +-1, got {self.s}, {self.t}")

    @classmethod
    def from_arrays(cls, s: npt.ArrayLike, t: npt.ArrayLike) -> Self:
        return cls(tuple(int(v) for v in np.asarray(s)), tuple(int(v) for v in np.asarray(t)))

    def matrix(self) -> npt.NDArray[np.float64]:
        return np.outer(self.s, self.t).astype(float)


@dataclass(frozen=True)
class FeasibilityResult:
    feasible: bool
    lp_residual: float
    strategies: tuple[DeterministicStrategy, ...] = ()
    weights: npt.NDArray[np.float64] | None = None
    functional: npt.NDArray[np.float64] | None = None
    bound: float | None = None
    violation: float | None = None
    diagnostics: dict[str, float] = field(default_factory=dict)

    def reconstruction(self) -> npt.NDArray[np.float64]:
        if not self.feasible or self.weights is None:
            raise ValidationError("only feasible results carry a weights certificate")
        return sum(
            (w * strategy.matrix() for strategy, w in zip(self.strategies, self.weights)),
            start=np.zeros((len(self.strategies[0].s), len(self.strategies[0].t))),
        )
