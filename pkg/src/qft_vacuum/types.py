import math
from dataclasses import dataclass, field, replace
from typing import Self

import numpy as np
import numpy.typing as npt

from src.common.errors import CapacityError, DomainError, ValidationError

MAX_WICK_ORDER = 6


def require_mass(m: float) -> float:
    """Masses are strictly positive; the massless field is not supported."""

    if not (math.isfinite(m) and m > 0.0):
        raise DomainError(f"mass must be positive and finite, got {m}")
    return float(m)


@dataclass(frozen=True)
class SpacetimePoint:
    """(t, r) with metric signature (+, -, -, -); natural units hbar = c = 1."""

    t: float = 0.0
    r: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self) -> None:
        r = np.asarray(self.r, dtype=float)
        if r.shape != (3,) or not np.all(np.isfinite(r)) or not math.isfinite(self.t):
            raise ValidationError(f"invalid spacetime point t={self.t}, r={self.r}")
        object.__setattr__(self, "r", tuple(float(v) for v in r))

    def r_array(self) -> npt.NDArray[np.float64]:
        return np.asarray(self.r)

    def interval(self, other: "SpacetimePoint") -> float:
        """(x - y)^2 = (x0 - y0)^2 - |x - y|^2; negative for spacelike pairs."""

        dt = self.t - other.t
        dr = self.r_array() - other.r_array()
        return dt * dt - float(dr @ dr)

    def is_spacelike_to(self, other: "SpacetimePoint") -> bool:
        return self.interval(other) < 0.0

    def translated(self, shift: npt.ArrayLike) -> Self:
        return type(self)(self.t, tuple(self.r_array() + np.asarray(shift, dtype=float)))


@dataclass(frozen=True)
class SmearedField:
    """phi(f) for an equal-time Gaussian test function of unit L1 norm.

    f(t, r) = delta(t - center.t) (2 pi w^2)^(-3/2) exp(-|r - center.r|^2 / 2 w^2).
    Width 0 means the sharp point field phi(center). `conjugate` marks phi* in the
    complex-field variant.
    """

    center: SpacetimePoint = field(default_factory=SpacetimePoint)
    width: float = 0.5
    conjugate: bool = False

    def __post_init__(self) -> None:
        if not (math.isfinite(self.width) and self.width >= 0.0):
            raise ValidationError(f"test-function width must be >= 0, got {self.width}")

    def translated(self, shift: npt.ArrayLike) -> Self:
        return replace(self, center=self.center.translated(shift))

    def adjoint(self) -> Self:
        return replace(self, conjugate=not self.conjugate)


@dataclass(frozen=True)
class WickMonomial:
    """Ordered operator product phi(f_1) ... phi(f_n); the empty product is the identity."""

    factors: tuple[SmearedField, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "factors", tuple(self.factors))
        if len(self.factors) > MAX_WICK_ORDER:
            raise CapacityError(f"monomial degree {len(self.factors)} exceeds {MAX_WICK_ORDER}")

    @classmethod
    def identity(cls) -> Self:
        return cls(())

    @property
    def degree(self) -> int:
        return len(self.factors)

    def translated(self, shift: npt.ArrayLike) -> Self:
        return type(self)(tuple(f.translated(shift) for f in self.factors))

    def adjoint(self, complex_field: bool = False) -> Self:
        """Reversed product; real test functions make phi(f) self-adjoint."""

        reversed_factors = tuple(reversed(self.factors))
        if complex_field:
            reversed_factors = tuple(f.adjoint() for f in reversed_factors)
        return type(self)(reversed_factors)

    def __mul__(self, other: "WickMonomial") -> "WickMonomial":
        return WickMonomial(self.factors + other.factors)


@dataclass(frozen=True)
class DecayFit:
    """|v(d)| ~ C d^(-power) exp(-rate d)."""

    rate: float
    intercept: float
    stderr: float
    power: float


@dataclass(frozen=True)
class ClusterResidual:
    distance: float
    connected: float
    vacuum_shift: float
