"""Special functions shared by the first-level tests and the K-S engine."""
import math

from scipy import special

from .errors import InvalidParameter

_SF_TERM_CUTOFF = 1e-16


def erfc(x: float) -> float:
    """Complementary error function."""
    return math.erfc(x)


def igamc(s: float, x: float) -> float:
    """Regularized upper incomplete gamma function Q(s, x)."""
    if not s > 0:
        raise InvalidParameter(f"igamc needs s > 0, got {s}")
    if x < 0:
        raise InvalidParameter(f"igamc needs x >= 0, got {x}")
    return float(special.gammaincc(s, x))


def normal_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def kolmogorov_sf(t: float) -> float:
    """Asymptotic Kolmogorov survival function P(K > t).

    For t >= 1 uses the alternating series 2 * sum_{j>=1} (-1)^(j-1) exp(-2 j^2 t^2).
    Below 1 that series cancels badly, so the complement of the theta-function
    form sqrt(2 pi)/t * sum_{k>=1} exp(-(2k-1)^2 pi^2 / (8 t^2)) is used instead.
    Sums stop once a term drops below 1e-16; the result is clamped to [0, 1].
    """
    if t <= 0:
        return 1.0
    if t < 1.0:
        c = math.pi * math.pi / (8.0 * t * t)
        cdf = 0.0
        k = 1
        while True:
            term = math.exp(-(2 * k - 1) ** 2 * c)
            cdf += term
            if term < _SF_TERM_CUTOFF:
                break
            k += 1
        cdf *= math.sqrt(2.0 * math.pi) / t
        return min(1.0, max(0.0, 1.0 - cdf))
    val = 0.0
    j = 1
    while True:
        term = math.exp(-2.0 * j * j * t * t)
        val += term if j % 2 else -term
        if term < _SF_TERM_CUTOFF:
            break
        j += 1
    val *= 2.0
    return min(1.0, max(0.0, val))


def ks_boundary(alpha: float) -> float:
    """Critical value K(alpha) = sqrt(-ln(alpha/2) / 2) of the K-S test."""
    if not 0.0 < alpha < 1.0:
        raise InvalidParameter(f"alpha must lie in (0, 1), got {alpha}")
    return math.sqrt(-0.5 * math.log(alpha / 2.0))
