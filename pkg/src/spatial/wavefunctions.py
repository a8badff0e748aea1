import logging
import math
from typing import Sequence

import numpy as np
import numpy.typing as npt
from scipy import stats
from scipy.integrate import tplquad
from scipy.special import ndtr

from src.common.errors import DomainError, ValidationError
from src.spatial.types import BoxRegion, DisentanglementRow, GaussianPacket3D, ProductWavefunction
from src.spin_algebra.operators import single_detector_expectation, singlet_correlation
from src.spin_algebra.types import UnitVector3

logger = logging.getLogger(__name__)


def width_at_time(p: GaussianPacket3D, t: float) -> float:
    """eps_t = eps sqrt(1 + hbar^2 t^2 / (M^2 eps^4))."""

    if t < 0.0:
        raise DomainError(f"time must be non-negative, got {t}")
    spread = p.hbar * t / (p.mass * p.eps0 * p.eps0)
    return p.eps0 * math.hypot(1.0, spread)


def density(p: GaussianPacket3D, points: npt.ArrayLike, t: float = 0.0) -> npt.NDArray[np.float64]:
    """|psi(r, t)|^2 at each row of `points`."""

    sigma = width_at_time(p, t)
    offsets = np.asarray(points, dtype=float) - p.center_array()
    r_sq = np.sum(offsets * offsets, axis=-1)
    return (2.0 * math.pi * sigma * sigma) ** -1.5 * np.exp(-r_sq / (2.0 * sigma * sigma))


def _interval_mass(lo: npt.NDArray[np.float64], hi: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
    """Standard normal mass of [lo, hi], using the upper tail when both ends are positive."""

    upper = lo > 0.0
    return np.where(upper, ndtr(-lo) - ndtr(-hi), ndtr(hi) - ndtr(lo))


def region_probability(p: GaussianPacket3D, box: BoxRegion, t: float = 0.0) -> float:
    """Probability of finding the particle in `box`, as a product of 1-D Gaussian masses."""

    sigma = width_at_time(p, t)
    lo = (box.lo_array() - p.center_array()) / sigma
    hi = (box.hi_array() - p.center_array()) / sigma
    masses = np.clip(_interval_mass(lo, hi), 0.0, 1.0)
    return float(np.prod(masses))


def region_probability_quadrature(p: GaussianPacket3D, box: BoxRegion, t: float = 0.0) -> float:
    """Adaptive 3-D quadrature of |psi|^2 over a finite box; reference for the closed form."""

    lo, hi = box.lo_array(), box.hi_array()
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise ValidationError("quadrature reference needs a finite box")

    def integrand(z: float, y: float, x: float) -> float:
        return float(density(p, np.array([x, y, z]), t))

    value, _ = tplquad(
        integrand, lo[0], hi[0], lo[1], hi[1], lo[2], hi[2], epsabs=1e-12, epsrel=1e-10
    )
    return float(value)


def g_factor(wf: ProductWavefunction, O_A: BoxRegion, O_B: BoxRegion, t: float = 0.0) -> float:
    """Probability that particle 1 lands in O_A and particle 2 in O_B; 0 <= g <= 1."""

    return region_probability(wf.packet1, O_A, t) * region_probability(wf.packet2, O_B, t)


def local_correlation(
    wf: ProductWavefunction,
    a: UnitVector3,
    b: UnitVector3,
    O_A: BoxRegion,
    O_B: BoxRegion,
    t: float = 0.0,
) -> float:
    """<psi| sigma.a P_OA (x) sigma.b P_OB |psi> = g(O_A, O_B) D_spin(a, b)."""

    return g_factor(wf, O_A, O_B, t) * singlet_correlation(a, b)


def single_detector_term(
    packet: GaussianPacket3D, a: UnitVector3, box: BoxRegion, t: float = 0.0
) -> float:
    """<psi| sigma.a P_O (x) I |psi> for the product state; vanishes for the singlet."""

    return region_probability(packet, box, t) * single_detector_expectation(a)


def conditional_correlation(
    wf: ProductWavefunction,
    a: UnitVector3,
    b: UnitVector3,
    O_A: BoxRegion,
    O_B: BoxRegion,
    t: float = 0.0,
) -> float:
    """Correlation given that both particles were detected: omega / g."""

    g = g_factor(wf, O_A, O_B, t)
    if g <= 0.0:
        raise DomainError("detection probability underflowed to zero; conditional correlation undefined")
    return local_correlation(wf, a, b, O_A, O_B, t) / g


def disentanglement_scan(
    wf: ProductWavefunction,
    a: UnitVector3,
    b: UnitVector3,
    O_A: BoxRegion,
    O_B: BoxRegion,
    l_values: Sequence[npt.ArrayLike],
    t: float = 0.0,
) -> list[DisentanglementRow]:
    """Local correlation with O_A translated by each l; tends to zero as |l| grows."""

    if len(l_values) == 0:
        raise ValidationError("translation list must be non-empty")

    d_spin = singlet_correlation(a, b)
    rows: list[DisentanglementRow] = []
    for shift in l_values:
        box = O_A.translated(shift)
        g = g_factor(wf, box, O_B, t)
        rows.append(
            DisentanglementRow(
                distance=float(np.linalg.norm(np.asarray(shift, dtype=float))),
                correlation=g * d_spin,
                g=g,
                single_a=single_detector_term(wf.packet1, a, box, t),
                single_b=single_detector_term(wf.packet2, b, O_B, t),
            )
        )
    logger.debug("[Disentanglement] %d translations, last |corr| = %.3e", len(rows), abs(rows[-1].correlation))
    return rows


def modified_local_equation(
    wf: ProductWavefunction,
    r1: npt.ArrayLike,
    r2: npt.ArrayLike,
    t: float,
    alpha: float,
    beta: float,
) -> float:
    """|phi(r1, r2, t)|^2 cos(alpha - beta): the pointwise density-weighted correlation."""

    joint = float(density(wf.packet1, r1, t)) * float(density(wf.packet2, r2, t))
    return joint * math.cos(alpha - beta)


def tail_mass(p: GaussianPacket3D, radius: float, t: float = 0.0) -> float:
    """Integral of |psi|^2 over {|r| >= radius}: a noncentral chi-square(3) tail."""

    if radius < 0.0:
        raise DomainError(f"radius must be non-negative, got {radius}")
    sigma = width_at_time(p, t)
    x = (radius / sigma) ** 2
    nc = float(np.sum(p.center_array() ** 2)) / (sigma * sigma)
    if nc == 0.0:
        return float(stats.chi2.sf(x, df=3))
    return float(stats.ncx2.sf(x, df=3, nc=nc))
