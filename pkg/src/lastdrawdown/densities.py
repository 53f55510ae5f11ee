"""
Densities of the last drawdown of a drifted Brownian motion.

The PnL follows ``dX = mu dt + dW`` on ``[0, T]`` (unit volatility, so the
drift ``mu`` is the annualised Sharpe ratio). The last drawdown is measured
from the last time the running maximum was attained:

* length ``l = T - s_max`` (years)
* depth  ``d = max X - X_T`` (volatility units)

All densities are assembled from the normal loss function
``L(x) = phi(x) - x Phi(-x)``:

    rho(l)    = 2 L(-mu sqrt(T-l)) L(mu sqrt l) / sqrt(l (T-l))
    g(d, l)   = 2 (d / l^1.5) phi((d + mu l) / sqrt l) L(-mu sqrt(T-l)) / sqrt(T-l)

``g`` is the joint density of (depth, length) with the level of the maximum
integrated out in closed form; ``psi(d)`` integrates it over ``l``.
Integrals over ``l`` use ``l = T sin^2(theta)``, whose Jacobian
``2 sqrt(l (T-l))`` cancels both inverse-square-root endpoint singularities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, List

from . import numkernel as nk
from .errors import DomainError
from .quadrature import integrate_adaptive

_HALF_PI = 0.5 * math.pi


@dataclass(frozen=True)
class ProcessSpec:
    """Drifted Brownian PnL model: Sharpe ratio (per sqrt year) and horizon (years)."""

    sharpe: float
    horizon: float

    def __post_init__(self):
        if not math.isfinite(self.sharpe):
            raise DomainError(f"sharpe must be finite, got {self.sharpe!r}")
        if not (math.isfinite(self.horizon) and self.horizon > 0.0):
            raise DomainError(f"horizon must be positive and finite, got {self.horizon!r}")


@dataclass(frozen=True)
class JointPoint:
    depth: float
    length: float
    max_value: float = math.nan


# -- substitution helpers ---------------------------------------------------


def _theta_of(length: float, horizon: float) -> float:
    ratio = min(max(length / horizon, 0.0), 1.0)
    return math.asin(math.sqrt(ratio))


def _length_of(theta: float, horizon: float) -> tuple:
    """Return ``(l, T - l)`` for ``l = T sin^2 theta`` without cancellation."""
    s = math.sin(theta)
    c = math.cos(theta)
    return horizon * s * s, horizon * c * c


def _theta_breakpoints(horizon: float, lengths: Iterable[float]) -> List[float]:
    out = []
    for ell in lengths:
        if 0.0 < ell < horizon and math.isfinite(ell):
            out.append(_theta_of(ell, horizon))
    return out


def _scale_points(*centres: float) -> List[float]:
    pts = []
    for c in centres:
        if c > 0.0 and math.isfinite(c):
            pts.extend((0.1 * c, c, 10.0 * c))
    return pts


def _depth_peak_length(depth: float, mu: float) -> float:
    """Maximiser in ``l`` of ``l^-1.5 phi((d + mu l)/sqrt l)``."""
    if mu == 0.0:
        return depth * depth / 3.0
    mu2 = mu * mu
    # root of mu^2 l^2 + 3 l - d^2 = 0, written to avoid cancellation
    return 2.0 * depth * depth / (3.0 + math.sqrt(9.0 + 4.0 * mu2 * depth * depth))


# -- log-domain building blocks ---------------------------------------------


def _log_rho_jacobian(mu: float, ell: float, rest: float) -> float:
    """log of rho(l) * 2 sqrt(l (T-l)), i.e. log(4 L(-mu sqrt(T-l)) L(mu sqrt l))."""
    return (
        math.log(4.0)
        + nk.log_normal_loss(-mu * math.sqrt(rest))
        + nk.log_normal_loss(mu * math.sqrt(ell))
    )


def _log_joint(mu: float, depth: float, ell: float, rest: float) -> float:
    """log g(d, l); ``rest`` is ``T - l``."""
    sl = math.sqrt(ell)
    z = (depth + mu * ell) / sl
    return (
        math.log(2.0 * depth)
        - 1.5 * math.log(ell)
        + nk.std_normal_logpdf(z)
        + nk.log_normal_loss(-mu * math.sqrt(rest))
        - 0.5 * math.log(rest)
    )


def _log_depth_tail_kernel(mu: float, depth: float, ell: float) -> float:
    """
    log of ``sqrt(l) * int_d^inf g_partial(u, l) du`` where the ``u``-integral
    of ``(u / l^1.5) phi((u + mu l)/sqrt l)`` is done in closed form:

        phi(z) - mu sqrt(l) Phi(-z) = L(z) + (d / sqrt l) Phi(-z),  z = (d + mu l)/sqrt l

    Both terms on the right are non-negative, so no cancellation occurs.
    """
    sl = math.sqrt(ell)
    z = (depth + mu * ell) / sl
    log_loss = nk.log_normal_loss(z)
    if depth == 0.0:
        return log_loss
    _, value = nk.log_sum_exp_combine(
        [(1, log_loss), (1, math.log(depth / sl) + nk.std_normal_logcdf(-z))]
    )
    return value


# -- public densities --------------------------------------------------------


def _check_length(spec: ProcessSpec, length: float) -> float:
    length = float(length)
    if not (0.0 < length < spec.horizon):
        raise DomainError(
            f"length must lie strictly inside (0, {spec.horizon}), got {length!r}"
        )
    return length


def _check_depth(depth: float) -> float:
    depth = float(depth)
    if not (depth > 0.0 and math.isfinite(depth)):
        raise DomainError(f"depth must be positive and finite, got {depth!r}")
    return depth


def rho_length(spec: ProcessSpec, length: float) -> float:
    """Density (per year) of the last-drawdown length at ``length``."""
    ell = _check_length(spec, length)
    rest = spec.horizon - ell
    log_val = _log_rho_jacobian(spec.sharpe, ell, rest) - math.log(2.0) - 0.5 * (
        math.log(ell) + math.log(rest)
    )
    return math.exp(log_val)


def joint_dl_density(spec: ProcessSpec, depth: float, length: float) -> float:
    """Joint density of (depth, length), maximum level integrated out."""
    d = _check_depth(depth)
    ell = _check_length(spec, length)
    return math.exp(_log_joint(spec.sharpe, d, ell, spec.horizon - ell))


def _joint_theta_integrand(mu: float, depth: float, horizon: float):
    def f(theta: float) -> float:
        ell, rest = _length_of(theta, horizon)
        if ell <= 0.0 or rest <= 0.0:
            return 0.0
        # g * 2 sqrt(l (T-l))
        return math.exp(
            _log_joint(mu, depth, ell, rest) + math.log(2.0) + 0.5 * math.log(ell * rest)
        )

    return f


def _depth_breakpoints(spec: ProcessSpec, depth: float) -> List[float]:
    centres = [_depth_peak_length(depth, spec.sharpe)]
    if spec.sharpe != 0.0:
        centres.append(depth / abs(spec.sharpe))
        centres.append(1.0 / spec.sharpe ** 2)
    return _theta_breakpoints(spec.horizon, _scale_points(*centres))


def joint_length_integral(
    spec: ProcessSpec, depth: float, lower: float, upper: float
) -> float:
    """``int_lower^upper g(depth, l) dl`` for ``0 <= lower <= upper <= T``."""
    d = _check_depth(depth)
    T = spec.horizon
    if not (0.0 <= lower <= upper <= T):
        raise DomainError(f"need 0 <= lower <= upper <= {T}, got [{lower}, {upper}]")
    a, b = _theta_of(lower, T), _theta_of(upper, T)
    if lower == T:
        a = _HALF_PI
    if upper == T:
        b = _HALF_PI
    return integrate_adaptive(
        _joint_theta_integrand(spec.sharpe, d, T),
        a, b,
        breakpoints=_depth_breakpoints(spec, d),
    )


def psi_depth(spec: ProcessSpec, depth: float) -> float:
    """Density (per volatility unit) of the last-drawdown depth at ``depth``."""
    return joint_length_integral(spec, depth, 0.0, spec.horizon)


def length_tail_prob(spec: ProcessSpec, length: float) -> float:
    """P(last-drawdown length >= ``length``)."""
    length = float(length)
    T = spec.horizon
    if not (0.0 <= length <= T):
        raise DomainError(f"length must lie in [0, {T}], got {length!r}")
    if length == 0.0:
        return 1.0
    if length == T:
        return 0.0
    mu = spec.sharpe

    def f(theta: float) -> float:
        ell, rest = _length_of(theta, T)
        if ell <= 0.0 or rest <= 0.0:
            # the Jacobian-weighted density stays finite at the ends
            ell, rest = max(ell, 0.0), max(rest, 0.0)
        return math.exp(_log_rho_jacobian(mu, ell, rest))

    centres = [1.0 / mu ** 2] if mu != 0.0 else []
    value = integrate_adaptive(
        f, _theta_of(length, T), _HALF_PI,
        breakpoints=_theta_breakpoints(T, _scale_points(*centres)),
    )
    return min(max(value, 0.0), 1.0)


def depth_tail_prob(spec: ProcessSpec, depth: float) -> float:
    """P(last-drawdown depth >= ``depth``), a single integral over the length."""
    depth = float(depth)
    if not (depth >= 0.0 and math.isfinite(depth)):
        raise DomainError(f"depth must be finite and >= 0, got {depth!r}")
    if depth == 0.0:
        return 1.0
    mu, T = spec.sharpe, spec.horizon

    def f(theta: float) -> float:
        ell, rest = _length_of(theta, T)
        if ell <= 0.0:
            return 0.0
        rest = max(rest, 0.0)
        return math.exp(
            math.log(4.0)
            + nk.log_normal_loss(-mu * math.sqrt(rest))
            + _log_depth_tail_kernel(mu, depth, ell)
        )

    value = integrate_adaptive(
        f, 0.0, _HALF_PI, breakpoints=_depth_breakpoints(spec, depth)
    )
    return min(max(value, 0.0), 1.0)
