"""Riemann-sum regularization of the vacuum two-point function on a momentum lattice."""

import logging
import math
from typing import Sequence

import numpy as np
import numpy.typing as npt

from src.common.errors import DomainError
from src.qft_vacuum.types import SpacetimePoint
from src.qft_vacuum.wightman import w0_regularized, w0_spacelike
from src.random_field.types import ConvergenceRow, MomentumLattice

logger = logging.getLogger(__name__)


def plane_wave_phases(lattice: MomentumLattice, point: SpacetimePoint, m: float) -> npt.NDArray[np.float64]:
    """k x = k0 t - k . r for every lattice mode."""

    return lattice.energies(m) * point.t - lattice.modes @ point.r_array()


def lattice_covariance(x: SpacetimePoint, y: SpacetimePoint, lattice: MomentumLattice, m: float) -> complex:
    """sum_k weight(k) exp(-i k (x - y)), summed with math.fsum for order-independent rounding."""

    weights = lattice.weights(m)
    phase = plane_wave_phases(lattice, x, m) - plane_wave_phases(lattice, y, m)
    real = math.fsum(weights * np.cos(phase))
    imag = math.fsum(-weights * np.sin(phase))
    return complex(real, imag)


def mode_matrix(lattice: MomentumLattice, points: Sequence[SpacetimePoint], m: float) -> npt.NDArray[np.complex128]:
    """A[p, k] = sqrt(weight(k)) exp(-i k x_p), so that xi = A z and E xi xi^H = A A^H."""

    amplitude = np.sqrt(lattice.weights(m))
    phases = np.stack([plane_wave_phases(lattice, p, m) for p in points])
    return amplitude[None, :] * np.exp(-1j * phases)


def covariance_matrix(points: Sequence[SpacetimePoint], lattice: MomentumLattice, m: float) -> npt.NDArray[np.complex128]:
    """C[i, j] = lattice_covariance(x_i, x_j)."""

    a = mode_matrix(lattice, points, m)
    return a @ a.conj().T


def min_eigenvalue(matrix: npt.ArrayLike) -> float:
    c = np.asarray(matrix)
    return float(np.linalg.eigvalsh(0.5 * (c + c.conj().T)).min())


def cutoff_convergence_scan(
    x: SpacetimePoint, y: SpacetimePoint, m: float, lattices: Sequence[MomentumLattice]
) -> list[ConvergenceRow]:
    """Lattice covariance against the continuum for each lattice, in the order given.

    Each row carries both the unregulated W0 and the damped continuum the lattice
    actually discretizes.
    """

    if x.t != y.t:
        raise DomainError("convergence scan compares equal-time points")
    s = math.sqrt(-x.interval(y)) if x.interval(y) < 0.0 else 0.0
    if s == 0.0:
        raise DomainError("convergence scan needs distinct spacelike points")
    continuum = w0_spacelike(s, m)
    rows = []
    for lattice in lattices:
        value = lattice_covariance(x, y, lattice, m)
        row = ConvergenceRow(
            cutoff=lattice.cutoff,
            n_per_axis=lattice.n_per_axis,
            damping=lattice.damping,
            value=value,
            target=w0_regularized(s, m, lattice.damping),
            continuum=continuum,
        )
        logger.info(
            "[Lattice] cutoff %.2f n %d: |W - W0| = %.3e, regulated rel. dev. %.2e",
            row.cutoff,
            row.n_per_axis,
            row.deviation,
            row.regulated_deviation,
        )
        rows.append(row)
    return rows
