import math
from dataclasses import dataclass, field
from typing import Self

import numpy as np
import numpy.typing as npt

from src.common.errors import DomainError, ValidationError

Vector3 = tuple[float, float, float]


def _as_vector(values: npt.ArrayLike, name: str) -> Vector3:
    arr = np.asarray(values, dtype=float)
    if arr.shape != (3,):
        raise ValidationError(f"{name} must be a 3-vector, got shape {arr.shape}")
    return float(arr[0]), float(arr[1]), float(arr[2])


@dataclass(frozen=True)
class GaussianPacket3D:
    """Free Gaussian packet with a stationary center.

    `eps0` is the standard deviation of the position density |psi|^2 at t = 0, so
    |psi(r, t)|^2 = (2 pi eps_t^2)^(-3/2) exp(-|r - center|^2 / (2 eps_t^2)).
    Natural units by default (hbar = mass = 1).
    """

    center: Vector3 = (0.0, 0.0, 0.0)
    eps0: float = 1.0
    mass: float = 1.0
    hbar: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", _as_vector(self.center, "center"))
        for name in ("eps0", "mass", "hbar"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise DomainError(f"{name} must be positive and finite, got {value}")

    def center_array(self) -> npt.NDArray[np.float64]:
        return np.asarray(self.center)


@dataclass(frozen=True)
class BoxRegion:
    """Axis-aligned detector region lo < hi componentwise; infinite limits allowed."""

    lo: Vector3
    hi: Vector3

    def __post_init__(self) -> None:
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        if lo.shape != (3,) or hi.shape != (3,):
            raise ValidationError("box corners must be 3-vectors")
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)) or not np.all(lo < hi):
            raise ValidationError(f"box needs lo < hi componentwise, got lo={lo}, hi={hi}")
        object.__setattr__(self, "lo", tuple(float(v) for v in lo))
        object.__setattr__(self, "hi", tuple(float(v) for v in hi))

    @classmethod
    def whole_space(cls) -> Self:
        return cls((-math.inf,) * 3, (math.inf,) * 3)

    @classmethod
    def cube(cls, center: npt.ArrayLike, half_width: float) -> Self:
        c = np.asarray(center, dtype=float)
        return cls(tuple(c - half_width), tuple(c + half_width))

    @classmethod
    def half_space(cls, axis: int, threshold: float, upper: bool = True) -> Self:
        lo = [-math.inf] * 3
        hi = [math.inf] * 3
        if upper:
            lo[axis] = threshold
        else:
            hi[axis] = threshold
        return cls(tuple(lo), tuple(hi))

    def lo_array(self) -> npt.NDArray[np.float64]:
        return np.asarray(self.lo)

    def hi_array(self) -> npt.NDArray[np.float64]:
        return np.asarray(self.hi)

    def translated(self, shift: npt.ArrayLike) -> "BoxRegion":
        l = np.asarray(_as_vector(shift, "translation"))
        return BoxRegion(tuple(self.lo_array() + l), tuple(self.hi_array() + l))

    def contains(self, points: npt.NDArray[np.float64]) -> npt.NDArray[np.bool_]:
        """Row-wise membership for an (n, 3) array (closed box)."""

        return np.all((points >= self.lo_array()) & (points <= self.hi_array()), axis=-1)

    def min_norm(self) -> float:
        """Distance from the origin to the nearest point of the box."""

        nearest = np.clip(0.0, self.lo_array(), self.hi_array())
        return float(np.linalg.norm(nearest))


@dataclass(frozen=True)
class ProductWavefunction:
    """phi(r1, r2) = psi1(r1) psi2(r2), each factor normalized."""

    packet1: GaussianPacket3D = field(default_factory=GaussianPacket3D)
    packet2: GaussianPacket3D = field(default_factory=GaussianPacket3D)


@dataclass(frozen=True)
class DisentanglementRow:
    distance: float
    correlation: float
    g: float
    single_a: float
    single_b: float
