"""Vacuum n-point functions of the free field by Wick's theorem, and the cluster residual."""

import logging
import math
from functools import cache
from typing import Iterator, Sequence

from src.common.errors import CapacityError, DomainError
from src.qft_vacuum.types import MAX_WICK_ORDER, ClusterResidual, SmearedField, WickMonomial, require_mass
from src.qft_vacuum.wightman import smeared_covariance

logger = logging.getLogger(__name__)

type Pairing = tuple[tuple[int, int], ...]


def pairings(n: int) -> Iterator[Pairing]:
    """Perfect matchings of range(n) with i < j inside each pair; (n - 1)!! of them."""

    if n % 2:
        return
    yield from _pairing_list(tuple(range(n)))


@cache
def _pairing_list(indices: tuple[int, ...]) -> tuple[Pairing, ...]:
    if not indices:
        return ((),)
    first, rest = indices[0], indices[1:]
    out: list[Pairing] = []
    for pos, partner in enumerate(rest):
        remaining = rest[:pos] + rest[pos + 1 :]
        out.extend(((first, partner),) + tail for tail in _pairing_list(remaining))
    return tuple(out)


def _contraction(f: SmearedField, g: SmearedField, m: float, complex_field: bool) -> complex:
    if complex_field and f.conjugate == g.conjugate:
        return 0j
    return smeared_covariance(f, g, m)


def wick_npoint(
    fields: Sequence[SmearedField],
    m: float,
    complex_field: bool = False,
    linked: Sequence[int] | None = None,
) -> complex:
    """<0|phi(f_1) ... phi(f_n)|0> as the sum over pairings of ordered two-point products.

    For the complex field only phi-phi* contractions survive. Odd n gives 0.
    With `linked`, pairings that contract those positions only among themselves
    are dropped.
    """

    m = require_mass(m)
    n = len(fields)
    if n > MAX_WICK_ORDER:
        raise CapacityError(f"Wick expansion capped at order {MAX_WICK_ORDER}, got {n}")
    if n % 2:
        return 0j
    block = frozenset(linked or ())
    table: dict[tuple[int, int], complex] = {}
    total = 0j
    for pairing in pairings(n):
        if block and all((i in block) == (j in block) for i, j in pairing):
            continue
        term = 1.0 + 0j
        for i, j in pairing:
            if (i, j) not in table:
                table[(i, j)] = _contraction(fields[i], fields[j], m, complex_field)
            term *= table[(i, j)]
            if term == 0:
                break
        total += term
    return total


def vacuum_expectation(monomial: WickMonomial, m: float, complex_field: bool = False) -> complex:
    return wick_npoint(monomial.factors, m, complex_field)


def state_expectation(
    state: WickMonomial, observable: WickMonomial, m: float, complex_field: bool = False
) -> complex:
    """omega(X) = <0|C* X C|0> / <0|C* C|0> for the vector state C|0>."""

    bra = state.adjoint(complex_field)
    norm = wick_npoint((bra * state).factors, m, complex_field)
    if abs(norm) == 0.0 or not math.isfinite(abs(norm)):
        raise DomainError("state vector C|0> has zero norm")
    return wick_npoint((bra * observable * state).factors, m, complex_field) / norm


def cluster_residual(
    a: WickMonomial,
    b: WickMonomial,
    state: WickMonomial,
    shift: Sequence[float],
    m: float,
    complex_field: bool = False,
) -> ClusterResidual:
    """Both cluster limits at translation `shift` of the A-insertion.

    connected    = omega(A(l) B) - omega(A(l)) omega(B)
    vacuum_shift = omega(A(l)) - <0|A(l)|0>
    """

    needed = 2 * state.degree + a.degree + b.degree
    if needed > MAX_WICK_ORDER:
        raise CapacityError(
            f"cluster residual needs a {needed}-point function; cap is {MAX_WICK_ORDER}"
        )
    moved = a.translated(shift)
    omega_ab = state_expectation(state, moved * b, m, complex_field)
    omega_a = state_expectation(state, moved, m, complex_field)
    omega_b = state_expectation(state, b, m, complex_field)

    # <C* A C> - <A><C* C>: only pairings that link A to C
    bra = state.adjoint(complex_field)
    sandwich = (bra * moved * state).factors
    a_positions = range(bra.degree, bra.degree + moved.degree)
    norm = wick_npoint((bra * state).factors, m, complex_field)
    shift_value = wick_npoint(sandwich, m, complex_field, linked=a_positions) / norm if moved.degree else 0j

    distance = math.sqrt(sum(float(x) * float(x) for x in shift))
    residual = ClusterResidual(
        distance=distance,
        connected=(omega_ab - omega_a * omega_b).real,
        vacuum_shift=shift_value.real,
    )
    logger.debug(
        "[Cluster] l = %.3f: connected %.3e, vacuum shift %.3e",
        distance,
        residual.connected,
        residual.vacuum_shift,
    )
    return residual
