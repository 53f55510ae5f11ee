"""
Scalar normal-distribution helpers used by the drawdown densities.

Everything here works on plain floats. Tail quantities go through
``scipy.special`` (``ndtr``, ``log_ndtr``, ``erfcx``), which evaluate the
complementary error function directly, so small tails keep their relative
accuracy instead of being formed as ``1 - cdf``.
"""

from __future__ import annotations

import math
from typing import Iterable, Tuple

from scipy import special

from .errors import DomainError

LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
SQRT_2PI = math.sqrt(2.0 * math.pi)
_SQRT_HALF = math.sqrt(0.5)

# Above this argument the normal loss uses its asymptotic series.
_LOSS_SERIES_CUTOFF = 60.0


def _check_finite(x: float) -> float:
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"argument must be finite, got {x!r}")
    return x


def std_normal_pdf(x: float) -> float:
    x = _check_finite(x)
    return INV_SQRT_2PI * math.exp(-0.5 * x * x)


def std_normal_logpdf(x: float) -> float:
    x = _check_finite(x)
    return -0.5 * x * x - LOG_SQRT_2PI


def std_normal_cdf(x: float) -> float:
    """Phi(x), accurate in relative terms in both tails."""
    x = _check_finite(x)
    return float(special.ndtr(x))


def std_normal_logcdf(x: float) -> float:
    x = _check_finite(x)
    return float(special.log_ndtr(x))


def scaled_mills(x: float) -> float:
    """
    Return ``exp(x**2 / 2) * Phi(-x)``.

    Written as ``erfcx(x / sqrt 2) / 2`` so there is no overflow or loss of
    precision for large positive ``x``. Overflows to ``inf`` only for
    ``x < -37.6`` or so, where the true value exceeds the double range.
    """
    x = _check_finite(x)
    return 0.5 * float(special.erfcx(x * _SQRT_HALF))


def log_normal_loss(x: float) -> float:
    """
    Log of the normal loss function ``L(x) = phi(x) - x * Phi(-x)``.

    ``L(x) = E[(Z - x)^+]`` is strictly positive. For ``x > 0`` the two terms
    nearly cancel, so the difference is taken as ``phi(x) * (1 - x * R(x))``
    with the Mills ratio ``R = sqrt(2 pi) * scaled_mills``; far in the tail
    the bracket is replaced by its asymptotic expansion.
    """
    x = _check_finite(x)
    if x <= 0.0:
        log_phi = -0.5 * x * x - LOG_SQRT_2PI
        if x == 0.0:
            return log_phi
        # both terms positive; scalar log-add (logsumexp is slow on 2 floats)
        a, b = log_phi, math.log(-x) + float(special.log_ndtr(-x))
        hi, lo = (a, b) if a >= b else (b, a)
        return hi + math.log1p(math.exp(lo - hi))
    log_phi = -0.5 * x * x - LOG_SQRT_2PI
    if x <= _LOSS_SERIES_CUTOFF:
        mills = SQRT_2PI * scaled_mills(x)
        return log_phi + math.log1p(-x * mills)
    # 1 - x R(x) = x^-2 (1 - 3 x^-2 + 15 x^-4 - 105 x^-6 + 945 x^-8 - ...)
    inv2 = 1.0 / (x * x)
    series = 1.0
    term = 1.0
    for k in range(1, 8):
        term *= -(2 * k + 1) * inv2
        series += term
    return log_phi + math.log(inv2) + math.log(series)


def normal_loss(x: float) -> float:
    return math.exp(log_normal_loss(x))


def log_sum_exp_combine(
    log_terms: Iterable[Tuple[int, float]],
) -> Tuple[int, float]:
    """
    Add signed terms given as ``(sign, log|term|)`` pairs.

    Returns ``(sign, log|sum|)``. An exact cancellation comes back as
    ``(0, -inf)``; single-term input is returned unchanged.

    >>> log_sum_exp_combine([(1, 700.0), (1, 700.0)])[1] - 700.0
    0.6931471805599453
    """
    terms = [(int(s), float(v)) for s, v in log_terms]
    if not terms:
        raise DomainError("log_sum_exp_combine needs at least one term")
    for sign, value in terms:
        if sign not in (-1, 0, 1):
            raise DomainError(f"sign must be -1, 0 or +1, got {sign}")
        if math.isnan(value) or value == math.inf:
            raise DomainError(f"log-magnitude must be finite or -inf, got {value}")
    if len(terms) == 1:
        sign, value = terms[0]
        return (0, -math.inf) if sign == 0 or value == -math.inf else (sign, value)

    live = [(s, v) for s, v in terms if s != 0 and v != -math.inf]
    if not live:
        return 0, -math.inf
    pivot = max(v for _, v in live)
    pos = math.fsum(math.exp(v - pivot) for s, v in live if s > 0)
    neg = math.fsum(math.exp(v - pivot) for s, v in live if s < 0)
    if pos == neg:
        return 0, -math.inf
    if pos > neg:
        return 1, pivot + math.log(pos - neg)
    return -1, pivot + math.log(neg - pos)
