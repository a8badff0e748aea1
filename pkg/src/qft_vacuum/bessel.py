"""Modified Bessel functions of the second kind, orders 0 and 1.

Series about the origin for x <= 2, Steed's continued fraction (Temme's CF2) beyond.
Both branches reach ~1e-13 relative accuracy on (0, 700]. Above the split the
continued fraction stands in for the large-argument asymptotic series, which
diverges and cannot reach full precision for x near 2.
"""

import math

from scipy.integrate import quad

from src.common.errors import DomainError, NumericalError

SERIES_LIMIT = 2.0
EULER_GAMMA = 0.5772156649015329
_EPS = 1e-16
_MAX_TERMS = 10_000


def _require_positive(x: float) -> None:
    if not (x > 0.0) or math.isnan(x):
        raise DomainError(f"K_nu(x) needs x > 0, got {x}")


def _series(x: float) -> tuple[float, float]:
    half = 0.5 * x
    log_half = math.log(half)
    y = half * half
    # k = 0 terms; psi(1) = -gamma, psi(2) = 1 - gamma
    harmonic = 0.0
    term0 = 1.0  # y^k / (k!)^2
    term1 = 1.0  # y^k / (k! (k+1)!)
    k0 = -(log_half + EULER_GAMMA)
    k1_sum = term1 * (half * log_half - 0.5 * half * (1.0 - 2.0 * EULER_GAMMA))
    for k in range(1, _MAX_TERMS):
        term0 *= y / (k * k)
        term1 *= y / (k * (k + 1))
        harmonic += 1.0 / k
        psi_sum = 2.0 * (harmonic - EULER_GAMMA) + 1.0 / (k + 1)
        d0 = term0 * (harmonic - log_half - EULER_GAMMA)
        d1 = term1 * (half * log_half - 0.5 * half * psi_sum)
        k0 += d0
        k1_sum += d1
        if abs(d0) < _EPS * abs(k0) and abs(d1) < _EPS * abs(k1_sum):
            break
    return k0, 1.0 / x + k1_sum


def _continued_fraction(x: float) -> tuple[float, float]:
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = delh = d
    q1, q2 = 0.0, 1.0
    a1 = 0.25
    q = c = a1
    a = -a1
    s = 1.0 + q * delh
    for i in range(2, _MAX_TERMS):
        a -= 2 * (i - 1)
        c = -a * c / i
        q_new = (q1 - b * q2) / a
        q1, q2 = q2, q_new
        q += c * q_new
        b += 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h += delh
        dels = q * delh
        s += dels
        if abs(dels / s) < _EPS:
            break
    else:
        raise NumericalError("Bessel K continued fraction did not converge", {"x": x})
    h = a1 * h
    k0 = math.sqrt(math.pi / (2.0 * x)) * math.exp(-x) / s
    return k0, k0 * (x + 0.5 - h) / x


def bessel_k0_k1(x: float) -> tuple[float, float]:
    _require_positive(x)
    if x <= SERIES_LIMIT:
        return _series(x)
    return _continued_fraction(x)


def bessel_k0(x: float) -> float:
    return bessel_k0_k1(x)[0]


def bessel_k1(x: float) -> float:
    """K_1(x) for x > 0; underflows to 0.0 past x ~ 705."""

    return bessel_k0_k1(x)[1]


def bessel_k1_integral(x: float) -> float:
    """Reference K_1(x) = int_0^inf exp(-x cosh t) cosh t dt by adaptive quadrature."""

    _require_positive(x)
    upper = math.acosh(1.0 + 800.0 / x) + 1.0
    value, _ = quad(lambda t: math.exp(-x * math.cosh(t)) * math.cosh(t), 0.0, upper, epsabs=0.0, epsrel=1e-13, limit=400)
    return value
