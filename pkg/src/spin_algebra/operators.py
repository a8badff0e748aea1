"""Exact two-qubit side of the Bell analysis.

Everything here is a dense 2x2 or 4x4 computation. The singlet is stored as the
explicit column (|1>|0> - |0>|1>)/sqrt(2); correlations come from contracting it
against Kronecker products, never from the closed forms they are tested against.
"""

import math
from typing import Callable

import numpy as np

from src.common.errors import NumericalError, ValidationError
from src.spin_algebra.types import AngleSet, ComplexMatrix, UnitVector3

HERMITIAN_TOLERANCE = 1e-12
COMMUTATOR_TOLERANCE = 1e-12

SIGMA_1: ComplexMatrix = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_2: ComplexMatrix = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_3: ComplexMatrix = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY_2: ComplexMatrix = np.eye(2, dtype=complex)

_UP = np.array([1, 0], dtype=complex)
_DOWN = np.array([0, 1], dtype=complex)
SINGLET: ComplexMatrix = (np.kron(_DOWN, _UP) - np.kron(_UP, _DOWN)) / math.sqrt(2.0)

Correlator = Callable[[UnitVector3, UnitVector3], float]


def _require_square(matrix: ComplexMatrix, dim: int) -> None:
    if matrix.shape != (dim, dim):
        raise ValidationError(f"expected a {dim}x{dim} operator, got {matrix.shape}")


def is_hermitian(matrix: ComplexMatrix, tol: float = HERMITIAN_TOLERANCE) -> bool:
    return bool(np.max(np.abs(matrix - matrix.conj().T)) <= tol)


def expectation(state: ComplexMatrix, operator: ComplexMatrix) -> float:
    """<state| operator |state> for a Hermitian operator."""

    dim = state.shape[0]
    _require_square(operator, dim)
    if not is_hermitian(operator):
        raise ValidationError("expectation requires a Hermitian operator")
    value = np.vdot(state, operator @ state)
    return float(value.real)


def pauli_dot(a: UnitVector3) -> ComplexMatrix:
    """sigma . a = a1 sigma1 + a2 sigma2 + a3 sigma3."""

    return a.x * SIGMA_1 + a.y * SIGMA_2 + a.z * SIGMA_3


def singlet_correlation(a: UnitVector3, b: UnitVector3) -> float:
    return expectation(SINGLET, np.kron(pauli_dot(a), pauli_dot(b)))


def single_detector_expectation(a: UnitVector3) -> float:
    """<sigma.a (x) I> in the singlet; identically zero."""

    return expectation(SINGLET, np.kron(pauli_dot(a), IDENTITY_2))


def coplanar_vectors(alpha: float, beta: float) -> tuple[UnitVector3, UnitVector3]:
    """a = (cos a, 0, sin a), b = (-cos b, 0, -sin b), so that -a.b = cos(alpha - beta)."""

    a = UnitVector3.normalized(math.cos(alpha), 0.0, math.sin(alpha))
    b = UnitVector3.normalized(-math.cos(beta), 0.0, -math.sin(beta))
    return a, b


def chsh_value(
    a: UnitVector3,
    a_prime: UnitVector3,
    b: UnitVector3,
    b_prime: UnitVector3,
    correlator: Correlator,
) -> float:
    """|P(a,b) - P(a,b')| + |P(a',b) + P(a',b')|."""

    return abs(correlator(a, b) - correlator(a, b_prime)) + abs(
        correlator(a_prime, b) + correlator(a_prime, b_prime)
    )


def chsh_from_angles(angles: AngleSet, correlator: Correlator = singlet_correlation) -> float:
    """CHSH value of a 2x2 coplanar angle set under `correlator`."""

    if not angles.is_chsh():
        raise ValidationError(f"CHSH needs 2 alphas and 2 betas, got {angles.shape}")
    a, b = coplanar_vectors(angles.alphas[0], angles.betas[0])
    a_prime, b_prime = coplanar_vectors(angles.alphas[1], angles.betas[1])
    return chsh_value(a, a_prime, b, b_prime, correlator)


def side_a_operator(alpha: float) -> ComplexMatrix:
    s, c = math.sin(alpha), math.cos(alpha)
    return np.array([[s, c], [c, -s]], dtype=complex)


def side_b_operator(beta: float) -> ComplexMatrix:
    s, c = math.sin(beta), math.cos(beta)
    return np.array([[-s, -c], [-c, s]], dtype=complex)


def commutator_norm(first: ComplexMatrix, second: ComplexMatrix) -> float:
    """Frobenius norm of [first, second]."""

    return float(np.linalg.norm(first @ second - second @ first))


def operator_family_expectation(i: int, j: int, angles: AngleSet) -> float:
    """<psi| A_i B_j |psi> for A_i = M(alpha_i) (x) I and B_j = I (x) N(beta_j).

    Indices are 1-based. The two operators are checked to commute before the
    product is contracted; the result equals cos(alpha_i - beta_j).
    """

    m_a, m_b = angles.shape
    if not (1 <= i <= m_a and 1 <= j <= m_b):
        raise ValidationError(f"operator index ({i}, {j}) outside 1..{m_a} x 1..{m_b}")

    a_op = np.kron(side_a_operator(angles.alphas[i - 1]), IDENTITY_2)
    b_op = np.kron(IDENTITY_2, side_b_operator(angles.betas[j - 1]))
    norm = commutator_norm(a_op, b_op)
    if norm > COMMUTATOR_TOLERANCE:
        raise NumericalError("A_i and B_j fail to commute", {"commutator_norm": norm})
    return expectation(SINGLET, a_op @ b_op)
