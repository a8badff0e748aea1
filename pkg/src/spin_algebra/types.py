import math
from dataclasses import dataclass
from typing import Self

import numpy as np
import numpy.typing as npt

from src.common.errors import ValidationError

# Dense 2x2 / 4x4 operators and state columns.
ComplexMatrix = npt.NDArray[np.complex128]

UNIT_TOLERANCE = 1e-12
TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class UnitVector3:
    """Detector orientation on the Bloch sphere."""

    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        norm_sq = self.x * self.x + self.y * self.y + self.z * self.z
        if not math.isfinite(norm_sq) or abs(norm_sq - 1.0) > UNIT_TOLERANCE:
            raise ValidationError(
                f"({self.x}, {self.y}, {self.z}) is not a unit vector (|v|^2 = {norm_sq})"
            )

    @classmethod
    def normalized(cls, x: float, y: float, z: float) -> Self:
        norm = math.sqrt(x * x + y * y + z * z)
        if norm == 0.0:
            raise ValidationError("cannot normalize the zero vector")
        return cls(x / norm, y / norm, z / norm)

    @classmethod
    def from_polar(cls, theta: float, phi: float) -> Self:
        """theta from the z axis, phi in the xy plane."""

        s = math.sin(theta)
        return cls.normalized(s * math.cos(phi), s * math.sin(phi), math.cos(theta))

    def as_array(self) -> npt.NDArray[np.float64]:
        return np.array([self.x, self.y, self.z], dtype=float)

    def dot(self, other: "UnitVector3") -> float:
        return self.x * other.x + self.y * other.y + self.z * other.z

    def __neg__(self) -> "UnitVector3":
        return UnitVector3(-self.x, -self.y, -self.z)


def wrap_angle(angle: float) -> float:
    wrapped = math.fmod(float(angle), TWO_PI)
    if wrapped < 0.0:
        wrapped += TWO_PI
    # fmod of values just below 0 can round up to exactly 2*pi
    return 0.0 if wrapped >= TWO_PI else wrapped


@dataclass(frozen=True)
class AngleSet:
    """Measurement angles for side A (alphas) and side B (betas), wrapped into [0, 2pi)."""

    alphas: tuple[float, ...]
    betas: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.alphas or not self.betas:
            raise ValidationError("an angle set needs at least one alpha and one beta")
        for name in ("alphas", "betas"):
            values = getattr(self, name)
            if not all(math.isfinite(float(v)) for v in values):
                raise ValidationError(f"{name} contains a non-finite angle")
            object.__setattr__(self, name, tuple(wrap_angle(v) for v in values))

    @classmethod
    def chsh_optimal(cls) -> Self:
        """pi/2, 0 against pi/4, -pi/4: the quadruple reaching 2*sqrt(2)."""

        return cls((math.pi / 2, 0.0), (math.pi / 4, -math.pi / 4))

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.alphas), len(self.betas)

    def is_chsh(self) -> bool:
        return self.shape == (2, 2)

    def differences(self) -> npt.NDArray[np.float64]:
        """alpha_i - beta_j as an (m_A, m_B) array."""

        return np.subtract.outer(np.asarray(self.alphas), np.asarray(self.betas))
