import math

import pytest

from lastdrawdown.errors import QuadratureError
from lastdrawdown.quadrature import integrate_adaptive


def test_polynomial_and_reversed_limits():
    assert integrate_adaptive(lambda x: x * x, 0.0, 3.0) == pytest.approx(9.0, rel=1e-13)
    assert integrate_adaptive(lambda x: x * x, 3.0, 0.0) == pytest.approx(-9.0, rel=1e-13)
    assert integrate_adaptive(math.exp, 1.0, 1.0) == 0.0


def test_breakpoints_help_with_a_narrow_peak():
    width = 1e-4
    f = lambda x: math.exp(-0.5 * ((x - 0.3) / width) ** 2)
    exact = width * math.sqrt(2 * math.pi)
    assert integrate_adaptive(f, 0.0, 1.0, breakpoints=[0.3 - 8 * width, 0.3 + 8 * width]) == pytest.approx(exact, rel=1e-9)


def test_non_convergence_is_an_error():
    with pytest.raises(QuadratureError):
        integrate_adaptive(lambda x: 1.0 / x, 0.0, 1.0, limit=50)


def test_non_finite_integrand_is_an_error():
    with pytest.raises(QuadratureError):
        integrate_adaptive(lambda x: math.nan, 0.0, 1.0)
