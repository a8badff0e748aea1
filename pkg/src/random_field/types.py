import math
from dataclasses import dataclass
from functools import cached_property
from typing import Self

import numpy as np
import numpy.typing as npt

from src.common.errors import ValidationError
from src.qft_vacuum.types import SpacetimePoint, require_mass

DEFAULT_CUTOFF_PER_MASS = 8.0
DEFAULT_N_PER_AXIS = 48
# default damping is this many inverse cutoffs
DAMPING_SCALE = 8.0


@dataclass(frozen=True)
class MomentumLattice:
    """Midpoint grid k_i = -cutoff + (j + 1/2) dk, j = 0..n-1, dk = 2 cutoff / n, per axis.

    `damping` multiplies every mode weight by exp(-damping k0); None picks 8 / cutoff,
    0 gives the bare sharp-cutoff Riemann sum.
    """

    cutoff: float
    n_per_axis: int
    damping: float | None = None

    def __post_init__(self) -> None:
        if not (math.isfinite(self.cutoff) and self.cutoff > 0.0):
            raise ValidationError(f"cutoff must be positive, got {self.cutoff}")
        if self.n_per_axis < 8 or self.n_per_axis % 2:
            raise ValidationError(f"n_per_axis must be an even integer >= 8, got {self.n_per_axis}")
        if self.damping is None:
            object.__setattr__(self, "damping", DAMPING_SCALE / self.cutoff)
        elif not (math.isfinite(self.damping) and self.damping >= 0.0):
            raise ValidationError(f"damping must be >= 0, got {self.damping}")

    @classmethod
    def default(cls, m: float) -> Self:
        return cls(cutoff=DEFAULT_CUTOFF_PER_MASS * require_mass(m), n_per_axis=DEFAULT_N_PER_AXIS)

    @property
    def spacing(self) -> float:
        return 2.0 * self.cutoff / self.n_per_axis

    @property
    def mode_count(self) -> int:
        return self.n_per_axis**3

    def axis(self) -> npt.NDArray[np.float64]:
        return -self.cutoff + (np.arange(self.n_per_axis) + 0.5) * self.spacing

    @cached_property
    def modes(self) -> npt.NDArray[np.float64]:
        """(n^3, 3) array of lattice momenta."""

        kx, ky, kz = np.meshgrid(self.axis(), self.axis(), self.axis(), indexing="ij")
        return np.stack([kx.ravel(), ky.ravel(), kz.ravel()], axis=1)

    def energies(self, m: float) -> npt.NDArray[np.float64]:
        k = self.modes
        return np.sqrt(np.sum(k * k, axis=1) + require_mass(m) ** 2)

    def weights(self, m: float) -> npt.NDArray[np.float64]:
        """dk^3 / ((2 pi)^3 2 k0) exp(-damping k0) per mode."""

        k0 = self.energies(m)
        return self.spacing**3 / ((2.0 * math.pi) ** 3 * 2.0 * k0) * np.exp(-self.damping * k0)


@dataclass(frozen=True)
class FieldSample:
    """`values[s, p]` is xi at points[p] in sample s."""

    points: tuple[SpacetimePoint, ...]
    values: npt.NDArray[np.complex128]
    seed: int
    stream: int = 0

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class MomentEstimate:
    mean: complex
    stderr: float
    n_samples: int


@dataclass(frozen=True)
class MomentCheck:
    """One classical moment against its Wick value; passes within `tolerance` standard errors."""

    label: str
    estimate: MomentEstimate
    analytic: complex
    tolerance: float = 5.0

    @property
    def deviation(self) -> float:
        return abs(self.estimate.mean - self.analytic)

    @property
    def passed(self) -> bool:
        return self.deviation <= self.tolerance * self.estimate.stderr


@dataclass(frozen=True)
class ConvergenceRow:
    cutoff: float
    n_per_axis: int
    damping: float
    value: complex
    target: float
    continuum: float

    @property
    def deviation(self) -> float:
        """|lattice - w0_spacelike|."""

        return abs(self.value - self.continuum)

    @property
    def regulated_deviation(self) -> float:
        """Relative deviation from the damped continuum the lattice approximates."""

        return abs(self.value - self.target) / abs(self.target)
