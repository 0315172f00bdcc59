import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from borelheat import (ScalarField, approximate_potential, assemble_k, assemble_u,
                       consistency_suite, expansion_coefficients, mehler_exact,
                       model_table, modified_kernel, ou_exact, solve_pde_forward)
from borelheat.exceptions import InputError, MassLoss
from borelheat.kernels import TableCache, free_kernel, heat_residual, observed_order


def textbook_mehler(omega, t, x, y):
    sh, ch = math.sinh(omega * t), math.cosh(omega * t)
    return math.sqrt(omega / (4 * math.pi * sh)) * math.exp(
        -omega * ((x * x + y * y) * ch - 2 * x * y) / (4 * sh))


def psi_ou(omega, x):
    return (omega / (2 * math.pi)) ** 0.25 * math.exp(-omega * x * x / 4)


def test_free_kernel_value():
    assert free_kernel(0.1, 0.0, 0.0) == pytest.approx(0.892062058076, rel=1e-11)


@pytest.mark.parametrize("t, x, y", [(0.05, 0.0, 0.0), (0.1, 1.0, -1.0), (1.3, 2.0, 0.5)])
def test_mehler_matches_textbook_form(t, x, y):
    assert mehler_exact(1.7, t, x, y).value == pytest.approx(textbook_mehler(1.7, t, x, y),
                                                             rel=1e-13)


def test_mehler_origin_value():
    expected = (4 * math.pi * math.sinh(0.2) / 2) ** -0.5
    assert mehler_exact(2.0, 0.1, 0.0, 0.0).value == pytest.approx(expected, rel=1e-14)


def test_mehler_small_omega_limit():
    assert mehler_exact(1e-9, 0.3, 0.7, -0.2).value == pytest.approx(
        free_kernel(0.3, 0.7, -0.2), rel=1e-12)


def test_mehler_symmetry():
    assert mehler_exact(2.0, 0.4, 1.3, -0.6).value == mehler_exact(2.0, 0.4, -0.6, 1.3).value


def test_ou_long_time_limit():
    assert ou_exact(2.0, 40.0, 1.5, 0.3).value == pytest.approx(psi_ou(2.0, 0.3) ** 2, rel=1e-12)


def test_ou_concentrates_at_start():
    z = np.linspace(0.5, 1.5, 2001)
    dens = np.array([ou_exact(2.0, 1e-4, 1.0, zi).value for zi in z])
    assert z[np.argmax(dens)] == pytest.approx(1.0, abs=1e-3)
    assert trapezoid(dens, z) == pytest.approx(1.0, rel=1e-9)


@pytest.mark.parametrize("t, x, y", [(0.1, 0.0, 1.0), (0.7, -1.2, 0.4), (2.0, 2.5, -1.0)])
def test_ou_detailed_balance(t, x, y):
    lhs = psi_ou(2.0, x) ** 2 * ou_exact(2.0, t, x, y).value
    rhs = psi_ou(2.0, y) ** 2 * ou_exact(2.0, t, y, x).value
    assert lhs == pytest.approx(rhs, rel=1e-13)


@pytest.mark.parametrize("t, x, y", [(0.1, 0.0, 0.0), (0.25, 1.0, -1.0)])
def test_ou_is_conjugated_mehler(t, x, y):
    # W = x^2 - 1 for omega = 2, so u = e^t * Mehler
    k = psi_ou(2.0, y) / psi_ou(2.0, x) * math.exp(t) * textbook_mehler(2.0, t, x, y)
    assert ou_exact(2.0, t, x, y).value == pytest.approx(k, rel=1e-13)


def test_free_table_gives_free_kernel(free_model):
    table = model_table(free_model, 0.3, 8)
    for t, x in [(0.1, 0.3), (0.5, -1.0), (0.05, 2.0)]:
        assert assemble_u(table, t, x).value == pytest.approx(free_kernel(t, x, 0.3), rel=1e-15)
    assert assemble_u(model_table(free_model, 0.0, 8), 0.1, 0.0).value == pytest.approx(
        0.892062, abs=5e-7)


def test_mehler_table_borel_matches_exact(mehler_poly):
    table = expansion_coefficients(mehler_poly, 0.0, 20)
    est = assemble_u(table, 0.1, 0.0)
    assert est.method == "borel"
    assert est.value == pytest.approx(mehler_exact(2.0, 0.1, 0.0, 0.0).value, rel=1e-6)


def test_truncated_mode(mehler_poly):
    table = expansion_coefficients(mehler_poly, 0.0, 10)
    est = assemble_u(table, 0.01, 1.0, mode="truncated", order=6)
    assert est.method == "truncated(6)"
    assert est.value == pytest.approx(mehler_exact(2.0, 0.01, 1.0, 0.0).value, rel=1e-11)
    with pytest.raises(InputError):
        assemble_u(table, 0.01, 1.0, mode="truncated", order=12)
    with pytest.raises(InputError):
        assemble_u(table, 0.01, 1.0, mode="sideways")


def test_transition_kernel_matches_ou(ou_model):
    table = model_table(ou_model, 0.0)
    est = assemble_k(ou_model, table, 0.25, 0.5, 0.0)
    assert est.kind == "transition"
    assert est.value == pytest.approx(ou_exact(2.0, 0.25, 0.5, 0.0).value, rel=1e-6)


def test_transition_equals_heat_kernel_on_diagonal(trig_model):
    table = model_table(trig_model, 0.7, 12)
    k = assemble_k(trig_model, table, 0.1, 0.7, 0.7).value
    u = assemble_u(table, 0.1, 0.7).value
    assert k == pytest.approx(u, rel=1e-15)


def test_table_base_must_match(ou_model):
    table = model_table(ou_model, 0.0)
    with pytest.raises(InputError):
        assemble_k(ou_model, table, 0.1, 0.0, 0.5)


def test_local_table_rejects_far_points(trig_model):
    table = model_table(trig_model, 0.0, 8)
    with pytest.raises(InputError):
        assemble_u(table, 0.1, 6.0)


def test_modified_kernel_of_free_model(free_model):
    for y in (-1.0, 0.0, 1.5):
        table = model_table(free_model, y, 6)
        for t in (0.05, 0.5):
            assert modified_kernel(free_model, table, t, 0.3, y).value == pytest.approx(1.0, abs=1e-15)


def test_modified_kernel_small_time_limit(ou_model):
    table = model_table(ou_model, 0.4)
    assert modified_kernel(ou_model, table, 1e-6, 0.4, 0.4).value == pytest.approx(1.0, abs=1e-5)


def test_modified_kernel_composes_oracles(ou_model):
    table = model_table(ou_model, 0.0)
    t, x, y = 0.1, 1.0, 0.0
    series = math.exp(t) * textbook_mehler(2.0, t, x, y) / free_kernel(t, x, y)
    expected = psi_ou(2.0, y) / psi_ou(2.0, x) * series
    assert modified_kernel(ou_model, table, t, x, y).value == pytest.approx(expected, rel=1e-6)


def test_table_cache_reuses_tables(ou_model):
    cache = TableCache(ou_model, 10)
    a = cache.k(0.1, 0.5, 0.0)
    assert cache.table(0.0) is cache.table(0.0)
    assert a == pytest.approx(ou_exact(2.0, 0.1, 0.5, 0.0).value, rel=1e-6)
    # table about x, evaluated at y, through u(t,x,y) = u(t,y,x)
    assert cache.k_from(0.1, 0.5, 0.0) == pytest.approx(a, rel=1e-9)


def test_pde_free_kernel(free_model):
    sol = solve_pde_forward(free_model, 0.1, 0.0)
    z = np.linspace(-2, 2, 41)
    exact = np.array([free_kernel(0.1, 0.0, zi) for zi in z])
    assert np.max(np.abs(sol(z) - exact) / exact) < 1e-4


def test_pde_ou_kernel(ou_model):
    sol = solve_pde_forward(ou_model, 0.1, 1.0)
    z = np.linspace(-0.5, 2.5, 31)
    exact = np.array([ou_exact(2.0, 0.1, 1.0, zi).value for zi in z])
    assert np.max(np.abs(sol(z) - exact) / exact) < 1e-4
    assert sol.mass == pytest.approx(1.0, abs=1e-6)


def test_pde_second_order_stencil(free_model):
    sol = solve_pde_forward(free_model, 0.1, 0.0, order=2)
    assert sol(0.0) == pytest.approx(free_kernel(0.1, 0.0, 0.0), rel=1e-5)
    with pytest.raises(InputError):
        solve_pde_forward(free_model, 0.1, 0.0, order=3)


def test_pde_mass_loss(free_model):
    with pytest.raises(MassLoss):
        solve_pde_forward(free_model, 0.5, 0.0, L=1.0, h=1 / 64, dt=1e-3)


def test_observed_order_of_power_law():
    times = (0.2, 0.1, 0.05)
    assert observed_order(times, [t**3 for t in times]) == pytest.approx(3.0)
    assert observed_order(times, [0.0, 0.0, 0.0]) == math.inf


def test_heat_residual_order_trig(trig_model):
    times = (0.2, 0.1, 0.05, 0.025, 0.0125)
    res = heat_residual(trig_model, 0.0, 1.0, times, r=8)
    assert observed_order(times, res) >= 8 - 1.5


def test_consistency_of_free_model(free_model):
    rep = consistency_suite(free_model, 0.1, 0.1, [(0.0, 0.0), (1.0, -0.5)])
    assert rep.chapman_kolmogorov <= 1e-10
    assert rep.mass <= 1e-10
    assert rep.detailed_balance <= 1e-10
    assert rep.min_heat_order == math.inf


def test_consistency_of_exact_ou_oracle(ou_model):
    rep = consistency_suite(ou_model, 0.1, 0.1, [(0.0, 0.0), (1.0, -1.0)],
                            cache=lambda t, x, y: ou_exact(2.0, t, x, y).value, L=8.0)
    assert rep.chapman_kolmogorov <= 1e-8
    assert rep.mass <= 1e-8
