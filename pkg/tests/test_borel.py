import math

import mpmath
import numpy as np
import pytest
from scipy.integrate import quad

from borelheat.borel import (BorelSeries, FormalSeries, borel_sum, borel_transform,
                             growth_check, laplace_sum, pade_continue, pole_clearance,
                             stability_sweep)
from borelheat.exceptions import DegenerateHankel, InputError, PoleOnContour


def euler_reference(t):
    val, _ = quad(lambda u: math.exp(-u) / (1 + t * u), 0, math.inf, epsabs=1e-15, epsrel=1e-13)
    return val


EULER = [(-1) ** r * math.factorial(r) for r in range(17)]


def test_reference_values_agree():
    # two independent quadratures of the Euler integral
    mp = mpmath.quad(lambda u: mpmath.exp(-u) / (1 + u / 10), [0, mpmath.inf])
    assert euler_reference(0.1) == pytest.approx(float(mp), rel=1e-13)
    assert float(mp) == pytest.approx(0.915633, abs=5e-7)


def test_transform_of_factorials():
    assert borel_transform(FormalSeries([math.factorial(r) for r in range(25)])).coeffs == (1.0,) * 25


def test_transform_of_short_series():
    assert borel_transform(FormalSeries([1, 1])).coeffs == (1.0, 1.0)


def test_transform_of_euler_series():
    assert borel_transform(FormalSeries(EULER)).coeffs == tuple((-1.0) ** r for r in range(17))


def test_transform_is_correctly_rounded_for_large_orders():
    b = borel_transform(FormalSeries([1.0] * 171)).coeffs
    assert b[170] == float(mpmath.mpf(1) / mpmath.factorial(170))


def test_pade_geometric_series():
    g = pade_continue(BorelSeries((1.0, -1.0, 1.0, -1.0)), 0, 1)
    assert g.poles == (complex(-1.0),)
    tau = np.linspace(0, 5, 11)
    assert np.allclose(g(tau), 1 / (1 + tau), rtol=1e-14)


def test_pade_exponential_two_two():
    b = BorelSeries(tuple(1 / math.factorial(r) for r in range(5)))
    g = pade_continue(b, 2, 2)
    # closed form [2/2] Pade of exp at 1 is (1 + 1/2 + 1/12)/(1 - 1/2 + 1/12) = 19/7
    assert g(1.0) == pytest.approx(19 / 7, rel=1e-13)
    assert abs(g(1.0) - math.e) / math.e < 1.5e-3


def test_pade_terminating_data():
    g = pade_continue(BorelSeries((1.0, 0.0, 0.0)), 0, 2)
    assert g.poles == ()
    assert np.allclose(g(np.array([0.0, 1.0, 7.0])), 1.0)


def test_pade_needs_enough_coefficients():
    with pytest.raises(InputError):
        pade_continue(BorelSeries((1.0, 1.0)), 1, 1)


def test_pade_degenerate_system():
    # b = 1/(1 - tau) exactly; [2/2] has a singular denominator system
    with pytest.raises(DegenerateHankel):
        pade_continue(BorelSeries((1.0,) * 5), 2, 2)


def test_pole_clearance_geometry():
    assert pole_clearance(()) == math.inf
    assert pole_clearance((complex(-3, 4),)) == 5.0
    assert pole_clearance((complex(2, -0.5), complex(-1, 0))) == 0.5


def test_laplace_of_constant_and_identity():
    assert laplace_sum(lambda tau: np.ones_like(tau), 0.7).value == pytest.approx(1.0, rel=1e-15)
    assert laplace_sum(lambda tau: tau, 0.3).value == pytest.approx(0.3, rel=1e-14)


def test_laplace_of_resolvent():
    g = pade_continue(BorelSeries((1.0, -1.0)), 0, 1)
    res = laplace_sum(g, 0.1)
    assert res.value == pytest.approx(euler_reference(0.1), rel=1e-12)
    assert res.trusted


def test_laplace_refuses_pole_on_contour():
    g = pade_continue(BorelSeries((1.0, 0.5, 0.25)), 0, 1)   # pole at tau = 2
    with pytest.raises(PoleOnContour):
        laplace_sum(g, 0.1)


def test_borel_sum_geometric_series():
    res = borel_sum(FormalSeries([1.0] * 33), 0.5, (32, 0))
    assert res.value == pytest.approx(2.0, abs=1e-8)


def test_borel_sum_euler_series():
    res = borel_sum(FormalSeries(EULER), 0.1)
    assert res.value == pytest.approx(euler_reference(0.1), rel=1e-12)
    assert res.attempts[0] == (8, 8)


def test_borel_sum_polynomial_is_partial_sum():
    res = borel_sum(FormalSeries([1.0, -1.0, 0.5]), 0.2, (2, 0))
    # 1 - 0.2 + 0.5 * 0.04
    assert res.value == pytest.approx(0.82, abs=1e-14)


def test_borel_sum_pole_on_contour_without_retry():
    with pytest.raises(PoleOnContour):
        borel_sum(FormalSeries([1.0, 1.0, 2.0]), 0.1, (0, 1), retry=False)


def test_stability_sweep_flags_nothing_on_exact_data():
    rep = stability_sweep(FormalSeries(EULER), 0.1, (4, 4))
    assert rep.stable and rep.spread < 1e-10


def test_growth_of_constant():
    g = pade_continue(BorelSeries((1.0, 0.0, 0.0)), 0, 2)
    rep = growth_check(g, 0.3, 50.0)
    assert rep.max_ratio == 1.0 and rep.tau_at_max == 0.0 and rep.respected


def test_growth_of_exponential_is_flagged():
    g = lambda tau: np.exp(tau)
    rep = growth_check(g, 0.5, 50.0)
    assert rep.max_ratio > 1 and not rep.respected


def test_growth_of_mehler_transform(mehler_poly):
    from borelheat import expansion_coefficients
    from borelheat.model import SymmetricMeasure, regularity_certificate
    cert = regularity_certificate(SymmetricMeasure([(0.0, 1.0)]), 1.0, 0.0, 1.0)
    values = expansion_coefficients(mehler_poly, 0.0, 20).values(1.0)
    g = pade_continue(borel_transform(FormalSeries(values)), 10, 10)
    assert growth_check(g, cert, 50.0).max_ratio <= 1.0 + 1e-12
