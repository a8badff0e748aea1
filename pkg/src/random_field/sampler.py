"""Complex Gaussian random field whose moments reproduce the free complex field's vacuum moments.

xi(x) = sum_k sqrt(weight(k)) exp(-i k x) z_k with circular standard complex Gaussians
z_k, so E xi(x) xi*(y) = lattice_covariance(x, y) and E xi(x) xi(y) = 0.
"""

import itertools
import logging
import math
from typing import Sequence

import numpy as np
import numpy.typing as npt

from src.common.errors import CapacityError, ValidationError
from src.common.streams import block_rng, ordered_map
from src.qft_vacuum.types import SpacetimePoint
from src.random_field.lattice import lattice_covariance, mode_matrix
from src.random_field.types import FieldSample, MomentEstimate, MomentumLattice

logger = logging.getLogger(__name__)

SAMPLE_BLOCK = 32
MIN_MOMENT_SAMPLES = 10_000
MAX_FACTORS_PER_KIND = 2


def sample_field(
    lattice: MomentumLattice,
    points: Sequence[SpacetimePoint],
    m: float,
    seed: int,
    n_samples: int = 1,
    phase: float = 0.0,
    stream: int = 0,
    block_size: int = SAMPLE_BLOCK,
) -> FieldSample:
    """Draw `n_samples` realizations of xi at `points`.

    Every block of `block_size` samples has its own generator, so the output is
    bit-identical for any BELLTIME_THREADS. `phase` rotates every amplitude z_k by
    exp(i phase) before summation.
    """

    points = tuple(points)
    if not points:
        raise ValidationError("sample_field needs at least one point")
    if n_samples < 1 or block_size < 1:
        raise ValidationError(f"n_samples and block_size must be positive, got {n_samples}, {block_size}")
    a = mode_matrix(lattice, points, m)
    rotation = complex(math.cos(phase), math.sin(phase))
    n_blocks = -(-n_samples // block_size)

    def draw(block: int) -> npt.NDArray[np.complex128]:
        size = min(block_size, n_samples - block * block_size)
        rng = block_rng(seed, stream, block)
        gauss = rng.standard_normal((2, lattice.mode_count, size))
        z = (gauss[0] + 1j * gauss[1]) * (rotation / math.sqrt(2.0))
        return (a @ z).T

    values = np.concatenate(ordered_map(draw, range(n_blocks)), axis=0)
    logger.debug("[Sampler] %d samples x %d points over %d modes", n_samples, len(points), lattice.mode_count)
    return FieldSample(points=points, values=values, seed=seed, stream=stream)


def moment_estimate(products: npt.ArrayLike) -> MomentEstimate:
    """Sample mean of complex products; stderr = sqrt((var Re + var Im) / n)."""

    z = np.asarray(products, dtype=complex)
    n = z.size
    if n < 2:
        raise ValidationError("moment estimate needs at least two samples")
    variance = np.var(z.real, ddof=1) + np.var(z.imag, ddof=1)
    return MomentEstimate(mean=complex(np.mean(z)), stderr=math.sqrt(variance / n), n_samples=n)


def wick_lattice_moment(
    xs: Sequence[SpacetimePoint], ys: Sequence[SpacetimePoint], lattice: MomentumLattice, m: float
) -> complex:
    """E xi(x_1)..xi(x_n) xi*(y_1)..xi*(y_n) = sum over bijections of prod W(x_i, y_pi(i)).

    Only xi-to-xi* contractions survive, so unequal counts give exactly 0.
    """

    if len(xs) != len(ys):
        return 0j
    table = {(i, j): lattice_covariance(x, y, lattice, m) for i, x in enumerate(xs) for j, y in enumerate(ys)}
    total = 0j
    for perm in itertools.permutations(range(len(ys))):
        term = 1.0 + 0j
        for i, j in enumerate(perm):
            term *= table[(i, j)]
        total += term
    return total


def verify_field_moments(
    xs: Sequence[SpacetimePoint],
    ys: Sequence[SpacetimePoint],
    lattice: MomentumLattice,
    m: float,
    n_samples: int,
    seed: int,
    stream: int = 0,
    phase: float = 0.0,
) -> tuple[MomentEstimate, complex]:
    """Monte Carlo E xi(x_1)..xi*(y_n) alongside its exact Wick value on the same lattice."""

    if len(xs) > MAX_FACTORS_PER_KIND or len(ys) > MAX_FACTORS_PER_KIND:
        raise CapacityError(
            f"moment verification is capped at {MAX_FACTORS_PER_KIND} factors of each kind, "
            f"got {len(xs)} xi and {len(ys)} xi*"
        )
    if not xs and not ys:
        raise ValidationError("empty moment")
    if n_samples < MIN_MOMENT_SAMPLES:
        raise ValidationError(f"moment verification needs n_samples >= {MIN_MOMENT_SAMPLES}, got {n_samples}")

    sample = sample_field(lattice, tuple(xs) + tuple(ys), m, seed, n_samples=n_samples, phase=phase, stream=stream)
    k = len(xs)
    products = np.prod(sample.values[:, :k], axis=1) * np.prod(sample.values[:, k:].conj(), axis=1)
    estimate = moment_estimate(products)
    analytic = wick_lattice_moment(xs, ys, lattice, m)
    logger.info(
        "[Moments] %d xi, %d xi*: empirical %.6g%+.6gj +- %.2e, analytic %.6g%+.6gj",
        len(xs),
        len(ys),
        estimate.mean.real,
        estimate.mean.imag,
        estimate.stderr,
        analytic.real,
        analytic.imag,
    )
    return estimate, analytic
