import math

import numpy as np
import pytest

from borelheat import (DiffusionCoefficient, build_map, check_hypotheses, ou_exact,
                       pullback_density, transformed_drift)
from borelheat.exceptions import NonPositiveSigma, OutOfImage
from borelheat.kernels import free_kernel
from borelheat.quadrature import legendre_rule

S = np.linspace(-20, 20, 81)


def test_unit_sigma_is_identity():
    m = build_map(DiffusionCoefficient("1", 0.0), (-20, 20))
    assert np.allclose(m.gamma(S), S, atol=1e-13)
    assert np.allclose(m.inverse(S), S, atol=1e-12)


def test_sqrt_sigma_gives_asinh():
    m = build_map(DiffusionCoefficient("sqrt(1 + x**2)", 0.0), (-300, 300))
    s = np.linspace(-300, 300, 1201)
    assert np.max(np.abs(m.gamma(s) - np.arcsinh(s))) < 1e-10
    assert np.max(np.abs(m.inverse(m.gamma(s)) - s)) < 1e-10


def test_constant_sigma_with_anchor():
    m = build_map(DiffusionCoefficient("2", 1.0), (-10, 10))
    assert np.allclose(m.gamma(S[np.abs(S) <= 10]), (S[np.abs(S) <= 10] - 1) / 2, atol=1e-14)


def test_sigma_must_be_positive():
    with pytest.raises(NonPositiveSigma):
        build_map(DiffusionCoefficient("x", 0.5), (-1, 1))


def test_inverse_outside_image():
    m = build_map(DiffusionCoefficient("2", 0.0), (-4, 4))
    with pytest.raises(OutOfImage):
        m.inverse(2.5)


@pytest.mark.parametrize("beta, sigma, expected", [
    ("sin(x)", "1", lambda s: np.sin(s)),
    ("0", "sqrt(1 + x**2)", lambda s: -s / (2 * np.sqrt(1 + s**2))),
    ("-x", "2", lambda s: -s / 2),
])
def test_transformed_drift(beta, sigma, expected):
    dc = DiffusionCoefficient(sigma, 0.0)
    assert np.allclose(transformed_drift(beta, dc, S), expected(S), atol=1e-14)


def test_pullback_with_unit_sigma_is_shift():
    m = build_map(DiffusionCoefficient("1", 0.5), (-10, 10))
    xt = np.linspace(-3, 3, 13)
    got = pullback_density(free_kernel, m, 0.2, 1.0, xt)
    assert np.allclose(got, [free_kernel(0.2, 0.5, x - 0.5) for x in xt], rtol=1e-13)


def test_pullback_preserves_mass():
    m = build_map(DiffusionCoefficient("sqrt(1 + x**2)", 0.0), (-300, 300))
    z, w = legendre_rule(96, -300, 300, 64)
    for x0 in (-2.0, 0.0, 1.5):
        mass = math.fsum(w * pullback_density(free_kernel, m, 0.1, x0, z))
        assert mass == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("s0", [0.0, 1.0])
def test_affine_pullback_of_ou(s0):
    m = build_map(DiffusionCoefficient("2", s0), (-10, 10))
    ou = lambda t, a, b: ou_exact(1.0, t, a, b).value
    xt = np.linspace(-3, 3, 7)
    got = pullback_density(ou, m, 0.1, 0.8, xt)
    want = [0.5 * ou(0.1, (0.8 - s0) / 2, (x - s0) / 2) for x in xt]
    assert np.allclose(got, want, rtol=1e-13)


def test_pullback_outside_interval():
    m = build_map(DiffusionCoefficient("1", 0.0), (-1, 1))
    with pytest.raises(OutOfImage):
        pullback_density(free_kernel, m, 0.1, 0.0, 2.0)


def test_hypotheses_hold_for_ou():
    rep = check_hypotheses("-x", DiffusionCoefficient("1"))
    assert rep.all_passed


def test_quadratic_sigma_fails_integrability():
    rep = check_hypotheses("0", DiffusionCoefficient("1 + x**2"))
    assert not rep.one_over_sigma_not_L1_at_infinity.passed
    assert not rep.all_passed


def test_sqrt_sigma_with_bounded_drift():
    rep = check_hypotheses("tanh(x)", DiffusionCoefficient("sqrt(1 + x**2)"))
    assert rep.all_passed
    assert math.isfinite(rep.bounded_combination.value)
    assert set(rep.to_dict()) == set(rep.flags())


def test_superlinear_drift_is_flagged():
    rep = check_hypotheses("-x**3", DiffusionCoefficient("1"))
    assert not rep.linear_bound_beta.passed
