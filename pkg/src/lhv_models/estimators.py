import logging
import math

import numpy as np
from scipy.integrate import trapezoid

from src.common.errors import DomainError, ValidationError
from src.common.streams import ordered_map
from src.lhv_models.hidden_variables import CosineModel, HiddenVariableModel
from src.lhv_models.model import DEFAULT_BLOCK_SIZE, BellTestModel
from src.lhv_models.types import ChshEstimate, CorrelationEstimate, GClassification
from src.spin_algebra.types import AngleSet

logger = logging.getLogger(__name__)

QUADRATURE_NODES = 2**12
MIN_SAMPLES = 1_000
REPRESENTABLE_LIMIT = 0.5
INV_SQRT2 = 1.0 / math.sqrt(2.0)


def analytic_cosine_lhv(g: float, alpha: float, beta: float) -> float:
    """Integral of sqrt(2g)cos(alpha - l) * sqrt(2g)cos(beta - l) dl / 2pi.

    Composite trapezoid on [0, 2pi]; the integrand is a periodic trigonometric
    polynomial, so the rule is exact to rounding. Equals g cos(alpha - beta).
    """

    model = CosineModel(g)
    grid = np.linspace(0.0, 2.0 * math.pi, QUADRATURE_NODES + 1)
    integrand = model.xi(alpha, grid) * model.eta(beta, grid)
    return float(trapezoid(integrand, grid) / (2.0 * math.pi))


def monte_carlo_correlation(
    model: HiddenVariableModel,
    alpha: float,
    beta: float,
    n: int,
    seed: int,
    stream: int = 0,
    block_size: int = DEFAULT_BLOCK_SIZE,
) -> CorrelationEstimate:
    """Empirical E xi_alpha eta_beta over n independent lambda draws."""

    if n < MIN_SAMPLES:
        raise ValidationError(f"monte carlo correlation needs n >= {MIN_SAMPLES}, got {n}")
    bell_test = BellTestModel(model, alpha, beta, n, seed, stream=stream, block_size=block_size)
    return bell_test.run()


def classify_g(g: float) -> GClassification:
    if not 0.0 <= g <= 1.0:
        raise DomainError(f"visibility g must lie in [0, 1], got {g}")
    if g <= REPRESENTABLE_LIMIT:
        return GClassification.REPRESENTABLE
    if g > INV_SQRT2:
        return GClassification.NOT_REPRESENTABLE
    return GClassification.OPEN_GAP


def chsh_of_model(
    model: HiddenVariableModel,
    angles: AngleSet,
    n: int,
    seed: int,
    block_size: int = DEFAULT_BLOCK_SIZE,
) -> ChshEstimate:
    """|P11 - P12| + |P21 + P22| from four independent Monte Carlo correlations.

    Pair (i, j) draws from stream 2*(i-1) + (j-1); the stderr is the quadrature sum
    of the four term errors.
    """

    if not angles.is_chsh():
        raise ValidationError(f"CHSH needs 2 alphas and 2 betas, got {angles.shape}")

    pairs = [(i, j) for i in (1, 2) for j in (1, 2)]

    def estimate(pair: tuple[int, int]) -> CorrelationEstimate:
        i, j = pair
        return monte_carlo_correlation(
            model,
            angles.alphas[i - 1],
            angles.betas[j - 1],
            n,
            seed,
            stream=2 * (i - 1) + (j - 1),
            block_size=block_size,
        )

    terms = dict(zip(pairs, ordered_map(estimate, pairs)))
    p = {pair: est.mean for pair, est in terms.items()}
    value = abs(p[(1, 1)] - p[(1, 2)]) + abs(p[(2, 1)] + p[(2, 2)])
    stderr = math.sqrt(sum(est.stderr**2 for est in terms.values()))

    logger.info("[CHSH] %s: %.6f +- %.2e", model.name, value, stderr)
    return ChshEstimate(value=value, stderr=stderr, terms=terms)
