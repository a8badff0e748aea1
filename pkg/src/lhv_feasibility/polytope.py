"""Membership in the local (correlation) polytope by linear programming.

The polytope is the convex hull of the rank-one sign matrices s t^T. Vertices are
enumerated explicitly (one representative per global sign flip), which is exact at
the sizes allowed here. A feasible target comes back with convex weights over
strategies; an infeasible one with a separating functional F and its local bound.
"""

import itertools
import logging
import math

import numpy as np
import numpy.typing as npt
from scipy.optimize import linprog

from src.common.errors import CapacityError, DomainError, NumericalError, ValidationError
from src.lhv_feasibility.types import CorrelationMatrix, DeterministicStrategy, FeasibilityResult
from src.spin_algebra.types import AngleSet

logger = logging.getLogger(__name__)

MAX_ENTRIES = 25
MAX_SETTINGS = 16
CERTIFICATE_TOLERANCE = 1e-8
WEIGHT_FLOOR = 1e-12
BISECTION_STEPS = 40
MIN_BISECTION_TOL = 1e-6


def target_matrix(g: float, angles: AngleSet) -> CorrelationMatrix:
    """entries[i][j] = g cos(alpha_i - beta_j)."""

    if not 0.0 <= g <= 1.0:
        raise DomainError(f"visibility g must lie in [0, 1], got {g}")
    return CorrelationMatrix(g * np.cos(angles.differences()), angles.alphas, angles.betas)


def chsh_functional() -> tuple[npt.NDArray[np.float64], float]:
    """Coefficients of P11 - P12 + P21 + P22 and its local bound."""

    return np.array([[1.0, -1.0], [1.0, 1.0]]), 2.0


def check_capacity(m_a: int, m_b: int) -> None:
    if m_a * m_b > MAX_ENTRIES or m_a + m_b > MAX_SETTINGS:
        raise CapacityError(
            f"{m_a}x{m_b} scenario exceeds the vertex-enumeration limits "
            f"(m_A*m_B <= {MAX_ENTRIES}, m_A+m_B <= {MAX_SETTINGS})"
        )


def enumerate_strategies(m_a: int, m_b: int) -> tuple[npt.NDArray[np.int8], npt.NDArray[np.int8]]:
    """All (s, t) with s_1 = +1, in lexicographic order: 2^(m_A + m_B - 1) rows."""

    free = np.array(list(itertools.product((-1, 1), repeat=m_a + m_b - 1)), dtype=np.int8)
    signs_a = np.concatenate([np.ones((len(free), 1), dtype=np.int8), free[:, : m_a - 1]], axis=1)
    return signs_a, free[:, m_a - 1 :]


def vertex_matrix(signs_a: npt.NDArray[np.int8], signs_b: npt.NDArray[np.int8]) -> npt.NDArray[np.float64]:
    """Row v is the flattened s_v t_v^T."""

    return np.einsum("vi,vj->vij", signs_a, signs_b).reshape(len(signs_a), -1).astype(float)


def _deduplicate(entries: npt.NDArray[np.float64]):
    """Collapse identical rows and columns; returns the reduced matrix and both index maps."""

    rows, row_inverse = np.unique(entries, axis=0, return_inverse=True)
    cols, col_inverse = np.unique(rows.T, axis=0, return_inverse=True)
    return cols.T, row_inverse.ravel(), col_inverse.ravel()


def _solve(c, a_ub=None, b_ub=None, a_eq=None, b_eq=None, bounds=None, what: str = "lp"):
    result = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq, bounds=bounds, method="highs")
    if result.status != 0:
        raise NumericalError(
            f"{what} did not solve: {result.message}",
            {"status": float(result.status)},
        )
    return result


def _primal_weights(vertices: npt.NDArray[np.float64], target: npt.NDArray[np.float64]):
    """min ||sum_v w_v M_v - T||_1 over the probability simplex."""

    n_vertices, n_entries = vertices.shape
    cost = np.concatenate([np.zeros(n_vertices), np.ones(2 * n_entries)])
    a_eq = np.zeros((n_entries + 1, n_vertices + 2 * n_entries))
    a_eq[:n_entries, :n_vertices] = vertices.T
    a_eq[:n_entries, n_vertices : n_vertices + n_entries] = np.eye(n_entries)
    a_eq[:n_entries, n_vertices + n_entries :] = -np.eye(n_entries)
    a_eq[n_entries, :n_vertices] = 1.0
    b_eq = np.concatenate([target, [1.0]])
    result = _solve(cost, a_eq=a_eq, b_eq=b_eq, bounds=(0, None), what="primal membership LP")

    weights = np.where(result.x[:n_vertices] < WEIGHT_FLOOR, 0.0, result.x[:n_vertices])
    return weights / weights.sum(), float(result.fun)


def _separating_functional(vertices: npt.NDArray[np.float64], target: npt.NDArray[np.float64]):
    """max F.T - c subject to F.M_v <= c for every vertex and |F_ij| <= 1."""

    n_vertices, n_entries = vertices.shape
    cost = np.concatenate([-target, [1.0]])
    a_ub = np.concatenate([vertices, -np.ones((n_vertices, 1))], axis=1)
    bounds = [(-1.0, 1.0)] * n_entries + [(None, None)]
    result = _solve(cost, a_ub=a_ub, b_ub=np.zeros(n_vertices), bounds=bounds, what="separation LP")
    return result.x[:n_entries]


def lhv_membership(target: CorrelationMatrix) -> FeasibilityResult:
    m_a, m_b = target.shape
    check_capacity(m_a, m_b)

    reduced, row_map, col_map = _deduplicate(target.entries)
    r_a, r_b = reduced.shape
    signs_a, signs_b = enumerate_strategies(r_a, r_b)
    vertices = vertex_matrix(signs_a, signs_b)
    flat_target = reduced.ravel()

    weights, l1_distance = _primal_weights(vertices, flat_target)
    residual = float(np.max(np.abs(vertices.T @ weights - flat_target)))
    diagnostics = {"l1_distance": l1_distance, "vertices": float(len(vertices))}

    if residual <= CERTIFICATE_TOLERANCE:
        support = np.flatnonzero(weights)
        strategies: dict[DeterministicStrategy, float] = {}
        for v in support:
            s = signs_a[v][row_map]
            t = signs_b[v][col_map]
            if s[0] < 0:
                s, t = -s, -t
            strategy = DeterministicStrategy.from_arrays(s, t)
            strategies[strategy] = strategies.get(strategy, 0.0) + float(weights[v])
        ordered = sorted(strategies)
        logger.debug("[Feasibility] %dx%d target feasible, residual %.2e", m_a, m_b, residual)
        return FeasibilityResult(
            feasible=True,
            lp_residual=residual,
            strategies=tuple(ordered),
            weights=np.array([strategies[s] for s in ordered]),
            diagnostics=diagnostics,
        )

    reduced_functional = _separating_functional(vertices, flat_target).reshape(r_a, r_b)
    # Put each reduced coefficient on the first original row/column that maps to it.
    functional = np.zeros((m_a, m_b))
    first_row = [int(np.flatnonzero(row_map == k)[0]) for k in range(r_a)]
    first_col = [int(np.flatnonzero(col_map == k)[0]) for k in range(r_b)]
    functional[np.ix_(first_row, first_col)] = reduced_functional

    bound = local_bound(functional)
    violation = float(np.sum(functional * target.entries)) - bound
    if violation <= CERTIFICATE_TOLERANCE:
        logger.warning(
            "[Feasibility] target sits within %.1e of the polytope boundary; "
            "residual %.2e, violation %.2e",
            CERTIFICATE_TOLERANCE,
            residual,
            violation,
        )
    logger.debug("[Feasibility] %dx%d target infeasible, violation %.3e", m_a, m_b, violation)
    return FeasibilityResult(
        feasible=False,
        lp_residual=residual,
        functional=functional,
        bound=bound,
        violation=violation,
        diagnostics=diagnostics,
    )


def local_bound(functional: npt.NDArray[np.float64]) -> float:
    """max over deterministic strategies of sum_ij F_ij s_i t_j."""

    m_a, m_b = functional.shape
    check_capacity(m_a, m_b)
    signs_a, signs_b = enumerate_strategies(m_a, m_b)
    return float(np.max(vertex_matrix(signs_a, signs_b) @ functional.ravel()))


def verify_certificate(result: FeasibilityResult, target: CorrelationMatrix) -> bool:
    """Re-check a certificate against `target` from scratch."""

    m_a, m_b = target.shape
    if result.feasible:
        if result.weights is None or not result.strategies:
            return False
        if any(len(s.s) != m_a or len(s.t) != m_b for s in result.strategies):
            raise ValidationError(f"certificate strategies do not match a {m_a}x{m_b} target")
        weights = np.asarray(result.weights)
        if np.min(weights) < -WEIGHT_FLOOR or abs(weights.sum() - 1.0) > CERTIFICATE_TOLERANCE:
            return False
        error = np.max(np.abs(result.reconstruction() - target.entries))
        return bool(error <= CERTIFICATE_TOLERANCE)

    if result.functional is None:
        return False
    if result.functional.shape != (m_a, m_b):
        raise ValidationError(
            f"functional shape {result.functional.shape} does not match target {(m_a, m_b)}"
        )
    violation = float(np.sum(result.functional * target.entries)) - local_bound(result.functional)
    return violation > CERTIFICATE_TOLERANCE


def critical_g(angles: AngleSet, tol: float = 1e-6) -> float:
    """Largest visibility g with g cos(alpha_i - beta_j) locally representable.

    Bisection on [0, 1] with lhv_membership as the oracle; membership holds at
    g* - tol and fails at g* + tol.
    """

    if tol < MIN_BISECTION_TOL:
        raise ValidationError(f"tolerance must be >= {MIN_BISECTION_TOL}, got {tol}")
    check_capacity(*angles.shape)

    def member(g: float) -> bool:
        return lhv_membership(target_matrix(g, angles)).feasible

    if member(1.0):
        return 1.0

    lo, hi = 0.0, 1.0
    for _ in range(BISECTION_STEPS):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if member(mid):
            lo = mid
        else:
            hi = mid
        logger.debug("[Feasibility] bracket [%.8f, %.8f]", lo, hi)

    g_star = 0.5 * (lo + hi)
    logger.info("[Feasibility] critical g = %.6f (tol %.1e, 1/sqrt2 = %.6f)", g_star, tol, 1 / math.sqrt(2))
    return g_star
