"""Vacuum two-point function of the free scalar field and its smeared counterpart."""

import logging
import math
from typing import Sequence

import numpy as np
from scipy import stats
from scipy.integrate import quad

from src.common.errors import DomainError, NumericalError, ValidationError
from src.qft_vacuum.bessel import bessel_k1
from src.qft_vacuum.types import DecayFit, SmearedField, SpacetimePoint, require_mass

logger = logging.getLogger(__name__)

FOUR_PI_SQ = 4.0 * math.pi * math.pi
QUAD_LIMIT = 500
# integrand factor exp(-sigma^2 k^2 / 2) is below e^-60 past this many widths
GAUSSIAN_CUTOFF = math.sqrt(120.0)
# accepted |abserr / value| before a quadrature is reported as non-convergent
QUAD_ACCEPT = 1e-3


def _require_distance(s: float) -> float:
    if not (math.isfinite(s) and s > 0.0):
        raise DomainError(f"spacelike distance must be positive, got {s}")
    return float(s)


def w0_spacelike(s: float, m: float) -> float:
    """W0(s) = m K1(m s) / (4 pi^2 s) for invariant spacelike distance s."""

    s = _require_distance(s)
    m = require_mass(m)
    return m * bessel_k1(m * s) / (FOUR_PI_SQ * s)


def w0_asymptotic(s: float, m: float) -> float:
    """Large-distance form m^2 / (4 pi^2 lam) sqrt(pi / (2 lam)) exp(-lam), lam = m s."""

    s = _require_distance(s)
    m = require_mass(m)
    lam = m * s
    return m * m / (FOUR_PI_SQ * lam) * math.sqrt(math.pi / (2.0 * lam)) * math.exp(-lam)


def w0_asymptotic_pi_scaled(s: float, m: float) -> float:
    """The same form written with 4 pi instead of 4 pi^2; overshoots W0 by a factor pi."""

    return math.pi * w0_asymptotic(s, m)


def asymptotic_ratio(s: float, m: float) -> float:
    """W0 / w0_asymptotic; tends to 1 as m s grows."""

    return w0_spacelike(s, m) / w0_asymptotic(s, m)


def w0_quadrature(s: float, m: float) -> float:
    """W0 from the Gaussian-damped momentum integral, independent of the Bessel routines.

    Writing 1/(2 k0) as a Gaussian integral and doing the k-integral first gives
    W0 = 1/(8 pi^2) int_0^inf u^-3 exp(-s^2 / (4 u^2) - m^2 u^2) du; the substitution
    u = sqrt(s / 2m) exp(v / 2) centres the peak at v = 0.
    """

    s = _require_distance(s)
    m = require_mass(m)
    lam = m * s
    span = math.acosh(1.0 + 800.0 / lam) + 2.0

    def integrand(v: float) -> float:
        return math.exp(-v - lam * math.cosh(v))

    value, abserr = quad(integrand, -span, span, epsabs=0.0, epsrel=1e-12, limit=QUAD_LIMIT)
    _check_quad("w0_quadrature", value, abserr, s=s, m=m)
    return m * value / (2.0 * FOUR_PI_SQ * s)


def w0_radial_quadrature(s: float, m: float) -> float:
    """W0 from the radial momentum integral with the massless part done in closed form.

    k / k0 = 1 - m^2 / (k0 (k0 + k)); the constant contributes 1 / s, the remainder
    is a Fourier sine integral. Loses digits to cancellation once m s exceeds ~5.
    """

    s = _require_distance(s)
    m = require_mass(m)
    m_sq = m * m

    def remainder(k: float) -> float:
        k0 = math.hypot(k, m)
        return m_sq / (k0 * (k0 + k))

    value, abserr = quad(remainder, 0.0, np.inf, weight="sin", wvar=s, limlst=200)
    _check_quad("w0_radial_quadrature", value, abserr, s=s, m=m, absolute=True)
    return (1.0 / s - value) / (FOUR_PI_SQ * s)


def w0_regularized(s: float, m: float, damping: float) -> float:
    """W0 with the k-integral damped by exp(-damping k0): the imaginary-time shifted W0."""

    if damping < 0.0:
        raise DomainError(f"damping must be non-negative, got {damping}")
    if damping == 0.0:
        return w0_spacelike(s, m)
    return w0_spacelike(math.hypot(_require_distance(s), damping), m)


def vacuum_one_point(point: SpacetimePoint | None = None) -> float:
    """<0|phi(x)|0> = 0 for the free field."""

    return 0.0


def statistical_dependence(x: SpacetimePoint, y: SpacetimePoint, m: float) -> float:
    """<0|phi(x) phi(y)|0> - <0|phi(x)|0><0|phi(y)|0> for spacelike-separated points."""

    if not x.is_spacelike_to(y):
        raise DomainError(f"points are not spacelike separated, (x-y)^2 = {x.interval(y)}")
    return w0_spacelike(math.sqrt(-x.interval(y)), m) - vacuum_one_point(x) * vacuum_one_point(y)


def _check_quad(label: str, value: float, abserr: float, absolute: bool = False, **context: float) -> None:
    scale = 1.0 if absolute else abs(value)
    if not math.isfinite(value) or abserr > QUAD_ACCEPT * max(scale, 1e-300):
        raise NumericalError(
            f"{label}: quadrature did not converge",
            {"value": value, "abserr": abserr, **context},
        )
    logger.debug("[Quadrature] %s = %.12g (abserr %.2e)", label, value, abserr)


def smeared_covariance(f: SmearedField, g: SmearedField, m: float) -> complex:
    """W(f, g) = <0|phi(f) phi(g)|0> for Gaussian test functions.

    Point fields (width 0 on both sides) use the closed form and must be spacelike.
    Equal-time pairs go through the position-space average, which keeps its relative
    accuracy far into the exponential tail; pairs at different times use the
    momentum integral.
    """

    m = require_mass(m)
    if f.width == 0.0 and g.width == 0.0:
        return complex(statistical_dependence(f.center, g.center, m))
    if f.center.t == g.center.t:
        return complex(smeared_covariance_position(f, g, m))
    return smeared_covariance_momentum(f, g, m)


def smeared_covariance_momentum(f: SmearedField, g: SmearedField, m: float) -> complex:
    """W(f, g) by momentum-space quadrature.

    W(f, g) = 1/(2 pi^2) int_0^inf k^2 / (2 k0) exp(-(wf^2 + wg^2) k^2 / 2) sinc(k d)
    exp(-i k0 tau) dk with d the spatial and tau the time separation of the centres.
    """

    m = require_mass(m)
    sigma_sq = f.width * f.width + g.width * g.width
    if sigma_sq == 0.0:
        raise ValidationError("momentum-space smearing needs at least one non-zero width")
    delta = f.center.r_array() - g.center.r_array()
    d = float(np.sqrt(delta @ delta))
    tau = f.center.t - g.center.t
    k_max = GAUSSIAN_CUTOFF / math.sqrt(sigma_sq)

    def radial(k: float) -> float:
        k0 = math.hypot(k, m)
        return k * k * math.exp(-0.5 * sigma_sq * k * k) / (2.0 * k0)

    def part(phase: str) -> float:
        def integrand(k: float) -> float:
            k0 = math.hypot(k, m)
            base = radial(k)
            if phase == "re":
                return base * math.cos(k0 * tau)
            return -base * math.sin(k0 * tau)

        if d > 0.0:
            value, abserr = quad(
                lambda k: integrand(k) / (k * d) if k > 0.0 else 0.0,
                0.0,
                k_max,
                weight="sin",
                wvar=d,
                limit=QUAD_LIMIT,
            )
        else:
            value, abserr = quad(integrand, 0.0, k_max, limit=QUAD_LIMIT)
        if not math.isfinite(value) or abserr > QUAD_ACCEPT * max(abs(value), 1e-15):
            raise NumericalError(
                "smeared covariance quadrature did not converge",
                {"value": value, "abserr": abserr, "distance": d, "tau": tau, "part": phase},
            )
        return value / (2.0 * math.pi * math.pi)

    real = part("re")
    imag = part("im") if tau != 0.0 else 0.0
    return complex(real, imag)


def smeared_covariance_position(f: SmearedField, g: SmearedField, m: float) -> float:
    """Equal-time W(f, g) as a position-space average of W0 over the Gaussian of variance wf^2 + wg^2.

    Reduces to (1 / (sqrt(2 pi) sigma d)) int_0^inf r W0(r) [e^-(r-d)^2/2s^2 - e^-(r+d)^2/2s^2] dr.
    """

    m = require_mass(m)
    if f.center.t != g.center.t:
        raise ValidationError("position-space smearing needs equal-time test functions")
    sigma = math.sqrt(f.width * f.width + g.width * g.width)
    delta = f.center.r_array() - g.center.r_array()
    d = float(np.sqrt(delta @ delta))
    if sigma == 0.0:
        return w0_spacelike(d, m)
    if d == 0.0:
        def integrand(r: float) -> float:
            return r * r * w0_spacelike(r, m) * math.exp(-r * r / (2.0 * sigma * sigma)) if r > 0.0 else 1.0 / FOUR_PI_SQ

        value, abserr = quad(integrand, 0.0, 12.0 * sigma, epsabs=0.0, epsrel=1e-11, limit=QUAD_LIMIT)
        _check_quad("smeared_covariance_position", value, abserr, distance=d)
        return 4.0 * math.pi * value / (2.0 * math.pi * sigma * sigma) ** 1.5

    def shell(r: float) -> float:
        if r == 0.0:
            return 0.0
        near = math.exp(-((r - d) ** 2) / (2.0 * sigma * sigma))
        far = math.exp(-((r + d) ** 2) / (2.0 * sigma * sigma))
        return r * w0_spacelike(r, m) * (near - far)

    lo = max(0.0, d - 12.0 * sigma)
    value, abserr = quad(shell, lo, d + 12.0 * sigma, points=[d], epsabs=0.0, epsrel=1e-11, limit=QUAD_LIMIT)
    _check_quad("smeared_covariance_position", value, abserr, distance=d)
    return value / (math.sqrt(2.0 * math.pi) * sigma * d)


def fit_decay_rate(distances: Sequence[float], values: Sequence[float], prefactor_power: float = 1.5) -> DecayFit:
    """Least-squares fit of log(|v| d^p) = c - rate d.

    p = 1.5 matches the d^-3/2 prefactor of W0 at large m d; squared covariances need p = 3.
    """

    d = np.asarray(distances, dtype=float)
    v = np.abs(np.asarray(values, dtype=float))
    if d.shape != v.shape or d.size < 2:
        raise ValidationError("need at least two (distance, value) pairs of equal length")
    if np.any(v == 0.0) or np.any(d <= 0.0):
        raise DomainError("decay fit needs positive distances and non-zero values")
    fit = stats.linregress(d, np.log(v) + prefactor_power * np.log(d))
    return DecayFit(rate=-float(fit.slope), intercept=float(fit.intercept), stderr=float(fit.stderr), power=prefactor_power)
