"""
Adaptive integration with hard failure on non-convergence.

Thin layer over QUADPACK (``scipy.integrate.quad``, 21-point Gauss-Kronrod
with bisection). Any non-zero QUADPACK status is turned into a
``QuadratureError`` instead of a warning, so a poor estimate never escapes
silently.
"""

from __future__ import annotations

import math
from typing import Callable, Optional, Sequence

from scipy import integrate

from .errors import QuadratureError

ABS_TOL = 1e-10
REL_TOL = 1e-8
MAX_SUBDIVISIONS = 10_000


def integrate_adaptive(
    func: Callable[[float], float],
    lower: float,
    upper: float,
    *,
    breakpoints: Optional[Sequence[float]] = None,
    abs_tol: float = ABS_TOL,
    rel_tol: float = REL_TOL,
    limit: int = MAX_SUBDIVISIONS,
) -> float:
    """Integrate ``func`` over ``[lower, upper]``.

    ``breakpoints`` strictly inside the interval are used as initial
    subdivision points (handy for sharp interior peaks).
    """
    if upper == lower:
        return 0.0
    if upper < lower:
        return -integrate_adaptive(
            func, upper, lower, breakpoints=breakpoints,
            abs_tol=abs_tol, rel_tol=rel_tol, limit=limit,
        )
    points = None
    if breakpoints:
        inner = sorted({p for p in breakpoints if lower < p < upper})
        points = inner or None
    value, abserr, info, *rest = integrate.quad(
        func, lower, upper,
        epsabs=abs_tol, epsrel=rel_tol, limit=limit,
        points=points, full_output=1,
    )
    ier = 0 if not rest else 1
    if ier or not math.isfinite(value):
        message = rest[0] if rest else "non-finite result"
        raise QuadratureError(
            f"integration over [{lower:g}, {upper:g}] did not converge "
            f"(estimate {value!r}, error {abserr:.3g}): {message}"
        )
    return float(value)
