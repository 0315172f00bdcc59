"""Property tests for the invariants of the expansion, the Borel pipeline and the Lamperti map."""

import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from borelheat import (DiffusionCoefficient, build_map, expansion_coefficients, gevrey_fit,
                       ou_exact, pullback_density)
from borelheat.borel import (BorelSeries, FormalSeries, borel_sum, borel_transform, laplace_sum,
                             pade_continue)
from borelheat.coeffs import PolynomialRep
from borelheat.kernels import TableCache, free_kernel

coef = st.floats(-3, 3, allow_nan=False, allow_infinity=False)
point = st.floats(-2, 2, allow_nan=False, allow_infinity=False)
time = st.floats(0.01, 1.0)


def W_poly(coeffs, interval=(-6, 6)):
    return PolynomialRep(np.asarray(coeffs, dtype=float), center=0.0, interval=interval)


@given(st.lists(coef, min_size=1, max_size=6), time)
def test_padded_polynomial_series_sum_exactly(a, t):
    k = len(a) - 1
    padded = a + [0.0] * k
    res = borel_sum(FormalSeries(padded), t)
    exact = math.fsum(c * t**r for r, c in enumerate(a))
    assert res.value == pytest.approx(exact, abs=1e-12 * max(1.0, sum(abs(c) for c in a)))


@given(st.lists(coef, min_size=8, max_size=8), st.lists(coef, min_size=8, max_size=8), coef, coef)
def test_borel_transform_is_linear(a, b, alpha, beta):
    lhs = borel_transform(FormalSeries([alpha * x + beta * y for x, y in zip(a, b)])).coeffs
    ba, bb = borel_transform(FormalSeries(a)).coeffs, borel_transform(FormalSeries(b)).coeffs
    rhs = [alpha * x + beta * y for x, y in zip(ba, bb)]
    scale = 1 + abs(alpha) * max(map(abs, a)) + abs(beta) * max(map(abs, b))
    assert np.allclose(lhs, rhs, rtol=0, atol=1e-14 * scale)


@given(st.lists(st.floats(-1, 1), min_size=2, max_size=2), st.floats(1.5, 4), st.floats(1.5, 4))
def test_pade_recovers_rational_data(num, p1, p2):
    # g = (n0 + n1 tau) / ((1 + tau/p1)(1 + tau/p2)): poles on the negative axis
    assume(abs(num[0]) > 0.1)
    assume(abs(p1 - p2) > 0.3)
    den = np.polynomial.polynomial.polymul([1, 1 / p1], [1, 1 / p2])
    n_terms = 8
    c = np.zeros(n_terms)
    for k in range(n_terms):
        acc = num[k] if k < 2 else 0.0
        acc -= sum(den[j] * c[k - j] for j in range(1, min(k, 2) + 1))
        c[k] = acc
    g = pade_continue(BorelSeries(tuple(c)), 1, 2)
    assert sorted(p.real for p in g.poles) == pytest.approx(sorted([-p1, -p2]), rel=1e-7)
    tau = np.linspace(0, 10, 11)
    exact = np.polynomial.polynomial.polyval(tau, num) / np.polynomial.polynomial.polyval(tau, den)
    assert np.allclose(g(tau), exact, rtol=1e-8, atol=1e-12)


@given(st.lists(coef, min_size=1, max_size=5), st.floats(0.05, 2.0))
def test_laplace_of_polynomial_gives_moments(c, t):
    g = lambda tau: np.polynomial.polynomial.polyval(tau, c)
    res = laplace_sum(g, t)
    exact = math.fsum(ck * math.factorial(k) * t**k for k, ck in enumerate(c))
    assert res.converged
    assert res.value == pytest.approx(exact, abs=1e-12 * max(1.0, sum(abs(v) for v in c)) * 40)


@given(st.lists(coef, min_size=3, max_size=5), point, point)
def test_coefficients_are_symmetric_in_x_and_y(w, x, y):
    W = W_poly(w)
    a_xy = expansion_coefficients(W, y, 5).values(x)
    a_yx = expansion_coefficients(W, x, 5).values(y)
    scale = np.maximum(1.0, np.abs(a_xy))
    assert np.all(np.abs(np.asarray(a_xy) - np.asarray(a_yx)) <= 1e-9 * scale)


@given(st.lists(coef, min_size=3, max_size=4), point, point, st.floats(-1, 1))
def test_coefficients_are_translation_covariant(w, x, y, shift):
    W = W_poly(w)
    moved = W.recenter(shift)
    moved = PolynomialRep(moved.coefficients, center=0.0, interval=W.interval)
    # moved(z) = W(z + shift), so moved's table at (x - shift, y - shift) is W's at (x, y)
    a = expansion_coefficients(W, y, 4).values(x)
    b = expansion_coefficients(moved, y - shift, 4).values(x - shift)
    assert np.allclose(a, b, rtol=1e-8, atol=1e-9)


@given(st.floats(-3, 3), point, point)
def test_constant_potential_coefficients(c, x, y):
    vals = expansion_coefficients(W_poly([c]), y, 6).values(x)
    assert vals == pytest.approx([(-c) ** r / math.factorial(r) for r in range(7)], rel=1e-13,
                                 abs=1e-15)


@pytest.fixture(scope="module")
def ou_cache(ou_model):
    return TableCache(ou_model)


@given(st.floats(0.02, 0.3), st.floats(-1.5, 1.5), st.floats(-1.5, 1.5))
def test_borel_kernel_detailed_balance_and_conjugation(ou_cache, ou_model, t, x, y):
    k_xy = ou_cache.k(t, x, y)
    k_yx = ou_cache.k(t, y, x)
    psi2 = lambda z: float(ou_model.psi(z)) ** 2
    assert psi2(x) * k_xy == pytest.approx(psi2(y) * k_yx, rel=1e-7, abs=1e-300)
    assert k_xy == pytest.approx(ou_exact(2.0, t, x, y).value, rel=1e-6)
    # k = psi(y)/psi(x) u
    u = ou_cache.u(t, x, y)
    assert k_xy == pytest.approx(float(ou_model.psi(y) / ou_model.psi(x)) * u, rel=1e-14)


@given(st.floats(1e-6, 1e6, exclude_min=True), st.floats(1e-4, 10))
def test_gevrey_fit_recovers_constants(K, kappa):
    vals = [K * math.factorial(r) / kappa**r for r in range(14)]
    est = gevrey_fit(vals, (5, 12))
    assert est.kappa == pytest.approx(kappa, rel=1e-9)
    assert est.K == pytest.approx(K, rel=1e-8)
    assert est.residual <= 1e-12


sigma_family = st.sampled_from(["1 + 0.5*x**2", "2 + sin(x)", "sqrt(1 + x**2)", "exp(x/4)",
                                "3 - 2*tanh(x)"])


@pytest.fixture(scope="module")
def maps():
    cache = {}

    def get(sigma, s0):
        key = (sigma, round(s0, 6))
        if key not in cache:
            cache[key] = build_map(DiffusionCoefficient(sigma, key[1]), (-8, 8))
        return cache[key]
    return get


@given(sigma_family, st.floats(-2, 2), st.lists(st.floats(-8, 8), min_size=1, max_size=10))
def test_lamperti_round_trip(maps, sigma, s0, s):
    m = maps(sigma, s0)
    s = np.asarray(s)
    assert np.allclose(m.inverse(m.gamma(s)), s, atol=1e-10)
    # gamma is increasing and vanishes at the anchor
    assert abs(float(m.gamma(round(s0, 6)))) < 1e-13
    order = np.argsort(s)
    assert np.all(np.diff(m.gamma(s[order])) >= 0)


@given(st.floats(0.2, 5), st.floats(-2, 2), st.floats(0.05, 1), point,
       st.lists(st.floats(-3, 3), min_size=1, max_size=6))
def test_affine_pullback_of_free_kernel(c, s0, t, x, xt):
    m = build_map(DiffusionCoefficient(repr(c), s0), (-10, 10), n_breakpoints=9)
    got = pullback_density(free_kernel, m, t, x, np.asarray(xt))
    # sigma = c turns unit noise into noise of variance 2 c^2 t
    want = [math.exp(-(x - v) ** 2 / (4 * t * c * c)) / math.sqrt(4 * math.pi * t * c * c)
            for v in xt]
    assert np.allclose(got, want, rtol=1e-12, atol=1e-300)
