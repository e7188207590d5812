import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riccati_lpt.quadgrid import (GK_NODES, GK_WEIGHTS, G_WEIGHTS, HALF_LINE, GridFunction, PanelGrid,
                                  QuadratureConfig, QuadratureError, build_grid_function, build_panel_grid,
                                  fsum_compensated, gauss_legendre_nodes, integrate)


def test_kronrod_rule_exact_to_degree_22():
    for k in range(23):
        exact = 2.0 / (k + 1) if k % 2 == 0 else 0.0
        assert GK_WEIGHTS @ GK_NODES**k == pytest.approx(exact, abs=1e-15)


def test_gauss_rule_exact_to_degree_13():
    for k in range(14):
        exact = 2.0 / (k + 1) if k % 2 == 0 else 0.0
        assert G_WEIGHTS @ GK_NODES**k == pytest.approx(exact, abs=1e-15)


def test_half_line_gaussian():
    val, err = integrate(lambda x: np.exp(-x * x), HALF_LINE)
    assert val == pytest.approx(math.sqrt(math.pi) / 2, rel=1e-14)
    assert err < 1e-12


def test_finite_interval_and_vector_integrand():
    val, _ = integrate(lambda x: np.array([np.sin(x), x**3]), (0.0, math.pi))
    assert val[0] == pytest.approx(2.0, rel=1e-13)
    assert val[1] == pytest.approx(math.pi**4 / 4, rel=1e-13)


def test_slowly_decaying_tail():
    val, _ = integrate(lambda x: 1.0 / (1.0 + x * x), HALF_LINE, QuadratureConfig(rel_tol=1e-11))
    assert val == pytest.approx(math.pi / 2, rel=1e-10)


def test_nonfinite_integrand_reports_abscissa():
    with pytest.raises(QuadratureError) as info:
        integrate(lambda x: np.where(x > 0.3, np.nan, 1.0), (0.0, 1.0))
    assert info.value.abscissa is not None and info.value.abscissa > 0.3


def test_budget_exhaustion_carries_best_estimate():
    cfg = QuadratureConfig(abs_tol=1e-300, rel_tol=1e-15, max_subdivisions=4)
    with pytest.raises(QuadratureError) as info:
        integrate(lambda x: np.sqrt(np.abs(x - 0.31)), (0.0, 1.0), cfg)
    assert np.isfinite(info.value.best_estimate)


def test_bad_domain():
    with pytest.raises(ValueError):
        integrate(np.exp, (1.0, 0.0))
    with pytest.raises(ValueError):
        integrate(np.exp, "whole-line")


@settings(max_examples=40, deadline=None)
@given(a=st.floats(0.1, 10.0), p=st.integers(0, 4))
def test_moments_of_exponential(a, p):
    # int_0^inf x^p e^(-a x) dx = p! / a^(p+1)
    val, _ = integrate(lambda x: x**p * np.exp(-a * x), HALF_LINE)
    assert val == pytest.approx(math.factorial(p) / a ** (p + 1), rel=1e-11)


def test_gauss_legendre_composite():
    x, w = gauss_legendre_nodes(np.linspace(0.0, 2.0, 5), n=10)
    assert w.sum() == pytest.approx(2.0, rel=1e-15)
    assert w @ np.exp(x) == pytest.approx(math.e**2 - 1, rel=1e-14)


def test_panel_grid_integration_derivative_and_interpolation():
    grid = PanelGrid(np.linspace(0.0, 3.0, 7), order=16)
    x = grid.nodes
    assert len(x) == 16 * 6 + 1 and np.all(np.diff(x) > 0)
    f = np.sin(2 * x)
    assert grid.integrate(f) == pytest.approx((1 - math.cos(6)) / 2, abs=1e-14)
    assert np.allclose(grid.derivative(f), 2 * np.cos(2 * x), atol=1e-11)
    xs = np.linspace(0.0, 3.0, 37)
    assert np.allclose(grid.interpolate(f, xs), np.sin(2 * xs), atol=1e-14)
    assert grid.panel_integrals(f).sum() == pytest.approx(grid.integrate(f), abs=1e-15)


def test_panel_grid_rejects_bad_breaks():
    with pytest.raises(ValueError):
        PanelGrid(np.array([0.0, 1.0, 1.0]))


@pytest.mark.parametrize("from_left", [True, False])
def test_scaled_cumulative_survives_underflow(from_left):
    # with w = exp(-x^2) at x ~ 40 the weight itself underflows; panels are
    # chosen so that log w changes by 2 across each, as the grid builder does
    grid = PanelGrid(np.sqrt(np.linspace(0.0, 1600.0, 801)), order=16)
    x = grid.nodes
    lw = -x * x
    got = grid.scaled_cumulative(2.0 * x, lw, from_left=from_left)
    if from_left:
        # int_0^x 2t e^-t^2 dt / e^-x^2 = e^x^2 - 1: compare in log space where large
        sel = x < 5
        assert np.allclose(got[sel], np.expm1(x[sel] ** 2), rtol=1e-12)
    else:
        # int_x^L 2t e^-t^2 dt / e^-x^2 = 1 - e^(x^2 - L^2)
        sel = x < 39
        assert np.allclose(got[sel], -np.expm1(x[sel] ** 2 - 1600.0), rtol=1e-12)
        assert np.all(np.isfinite(got))


def test_adaptive_grid_resolves_functions():
    grid = build_panel_grid(lambda x: np.array([np.exp(-x) * np.cos(5 * x)]), 0.0, 10.0, rel_tol=1e-12)
    xs = np.linspace(0, 10, 333)
    vals = np.exp(-grid.nodes) * np.cos(5 * grid.nodes)
    assert np.allclose(grid.interpolate(vals, xs), np.exp(-xs) * np.cos(5 * xs), atol=1e-12)


def test_grid_function_parity_and_tail():
    gf = build_grid_function(lambda x: x / (1 + x * x), 20.0, parity=-1, tail_exponent=1.0)
    assert gf(-2.0) == pytest.approx(-0.4, rel=1e-12)
    assert gf(40.0) == pytest.approx(40.0 / 1601.0, rel=1e-2)
    assert gf.derivative(-1.5) == pytest.approx((1 - 2.25) / (1 + 2.25) ** 2, rel=1e-9)
    with pytest.raises(ValueError):
        GridFunction(gf.grid, gf.values[:-1])


def test_fsum_compensated():
    assert fsum_compensated([1e16, 1.0, -1e16]) == 1.0
