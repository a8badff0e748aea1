"""Explicit classical product representation of the localized singlet correlation.

Probability space: r1 on the exterior ball B_L = {|r| >= L} with density
|psi1|^2 / eps, r2 on R^3 with density |psi2|^2, and an angle phi uniform on
[0, 2pi), all independent; eps = integral of |psi1|^2 over B_L < 1/2.

    xi(alpha)  = chi_{O_A(l)}(r1) * sqrt(2 eps) cos(alpha - phi)
    eta(beta)  = chi_{O_B}(r2)    * sqrt(2 eps) cos(beta - phi)

gives E xi eta = (P1(O_A(l)) / eps) * P2(O_B) * eps cos(alpha - beta)
             = g(O_A(l), O_B) cos(alpha - beta), with every variable bounded by sqrt(2 eps) < 1.
"""

import logging
import math
from typing import Sequence

import numpy as np
import numpy.typing as npt
from scipy import stats

from src.common.errors import NumericalError, PreconditionError
from src.lhv_models.estimators import monte_carlo_correlation
from src.lhv_models.hidden_variables import Block, HiddenVariableModel, Responses
from src.lhv_models.types import CorrelationEstimate
from src.spatial.types import BoxRegion, ProductWavefunction
from src.spatial.wavefunctions import region_probability, tail_mass, width_at_time

logger = logging.getLogger(__name__)

MAX_TAIL_MASS = 0.5
# Columns of a lambda block.
R1 = slice(0, 3)
R2 = slice(3, 6)
PHI = 6


class ProductRepresentationModel(HiddenVariableModel):
    name = "product-representation"

    def __init__(
        self,
        wf: ProductWavefunction,
        O_A: BoxRegion,
        O_B: BoxRegion,
        radius: float,
        t: float = 0.0,
    ) -> None:
        self.wf = wf
        self.O_A = O_A
        self.O_B = O_B
        self.radius = float(radius)
        self.t = float(t)

        self.tail = tail_mass(wf.packet1, self.radius, t)
        if not 0.0 < self.tail < MAX_TAIL_MASS:
            raise PreconditionError(
                f"tail mass of packet 1 outside |r| >= {radius} is {self.tail:.4g}; need 0 < eps < 1/2"
            )
        if O_A.min_norm() < self.radius:
            raise PreconditionError(
                f"detector region A comes within {O_A.min_norm():.4g} of the origin, inside |r| < {radius}"
            )

        self.amplitude = math.sqrt(2.0 * self.tail)
        self.sigma1 = width_at_time(wf.packet1, t)
        self.sigma2 = width_at_time(wf.packet2, t)

    def expected_space_factors(self) -> tuple[float, float]:
        """(E chi_{O_A}, E chi_{O_B}) under the reweighted measure."""

        return (
            region_probability(self.wf.packet1, self.O_A, self.t) / self.tail,
            region_probability(self.wf.packet2, self.O_B, self.t),
        )

    def _sample_exterior(self, rng: np.random.Generator, size: int) -> npt.NDArray[np.float64]:
        """Packet 1 restricted to |r| >= radius, drawn exactly at any tail mass.

        |r|^2 / sigma^2 is (noncentral) chi-square(3), so the radius comes from its
        inverse survival function at u * eps. Given |r| = rho, the direction follows a
        von Mises-Fisher law about the packet centre with kappa = rho |c| / sigma^2.
        """

        center = self.wf.packet1.center_array()
        sigma_sq = self.sigma1 * self.sigma1
        offset = float(np.linalg.norm(center))
        # 1 - random() lies in (0, 1], keeping isf finite
        u = (1.0 - rng.random(size)) * self.tail
        if offset == 0.0:
            q = stats.chi2.isf(u, df=3)
        else:
            q = stats.ncx2.isf(u, df=3, nc=offset * offset / sigma_sq)
        if not np.all(np.isfinite(q)):
            raise NumericalError(
                "exterior radius inversion failed",
                {"tail": self.tail, "radius": self.radius, "sigma": self.sigma1},
            )
        rho = np.maximum(np.sqrt(q * sigma_sq), self.radius)

        axis = center / offset if offset > 0.0 else np.array([0.0, 0.0, 1.0])
        kappa = rho * offset / sigma_sq
        v = 1.0 - rng.random(size)
        safe = np.maximum(kappa, 1e-12)
        w = np.where(
            kappa > 1e-12,
            1.0 + np.log(v + (1.0 - v) * np.exp(-2.0 * safe)) / safe,
            2.0 * v - 1.0,
        )
        w = np.clip(w, -1.0, 1.0)
        psi = rng.uniform(0.0, 2.0 * math.pi, size)
        e1 = np.cross(axis, [1.0, 0.0, 0.0] if abs(axis[0]) < 0.9 else [0.0, 1.0, 0.0])
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(axis, e1)
        side = np.sqrt(1.0 - w * w)
        directions = (
            w[:, None] * axis
            + (side * np.cos(psi))[:, None] * e1
            + (side * np.sin(psi))[:, None] * e2
        )
        return rho[:, None] * directions

    def sample_lambda(self, rng: np.random.Generator, size: int) -> Block:
        r1 = self._sample_exterior(rng, size)
        r2 = self.wf.packet2.center_array() + self.sigma2 * rng.standard_normal((size, 3))
        phi = rng.uniform(0.0, 2.0 * math.pi, size)
        return np.column_stack([r1, r2, phi])

    def xi(self, alpha: float, lambdas: Block) -> Responses:
        inside = self.O_A.contains(lambdas[:, R1]).astype(float)
        return inside * self.amplitude * np.cos(alpha - lambdas[:, PHI])

    def eta(self, beta: float, lambdas: Block) -> Responses:
        inside = self.O_B.contains(lambdas[:, R2]).astype(float)
        return inside * self.amplitude * np.cos(beta - lambdas[:, PHI])


def product_representation(
    wf: ProductWavefunction,
    O_A: BoxRegion,
    O_B: BoxRegion,
    L: float,
    n: int,
    seed: int,
    alphas: Sequence[float],
    betas: Sequence[float],
    translation: npt.ArrayLike = (0.0, 0.0, 0.0),
    t: float = 0.0,
) -> dict[tuple[float, float], CorrelationEstimate]:
    """Monte Carlo E xi_alpha eta_beta of the product representation over an angle grid.

    Detector A sits at O_A translated by `translation`. Grid cell (i, j) uses
    stream i * len(betas) + j.
    """

    model = ProductRepresentationModel(wf, O_A.translated(translation), O_B, L, t)
    logger.info(
        "[ProductRep] eps = %.4f, amplitude = %.4f, %dx%d grid, n = %d",
        model.tail,
        model.amplitude,
        len(alphas),
        len(betas),
        n,
    )

    estimates: dict[tuple[float, float], CorrelationEstimate] = {}
    for i, alpha in enumerate(alphas):
        for j, beta in enumerate(betas):
            estimates[(alpha, beta)] = monte_carlo_correlation(
                model, alpha, beta, n, seed, stream=i * len(betas) + j
            )
    return estimates
