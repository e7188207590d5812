import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import case1_result
from riccati_lpt import lpt, oracle
from riccati_lpt import trial as tr
from riccati_lpt.model import PotentialSpec


def test_harmonic_trial_has_no_correction():
    spec = PotentialSpec(2.25, 0.0)
    series = lpt.run_series(spec, tr.SimpleTrialParams(1.5, 0.0), order=3)
    # V0 = y0^2 - y0' carries no constant, so E1 is the whole variational energy
    assert series.E_terms[0] == 0.0
    assert series.E_terms[1] == pytest.approx(1.5, rel=1e-13)
    assert max(abs(e) for e in series.E_terms[2:]) < 1e-13
    assert all(np.max(np.abs(y.values)) < 1e-12 for y in series.y_terms)


@settings(max_examples=15, deadline=None)
@given(m2=st.floats(0.2, 4), g=st.floats(0.2, 4))
def test_closed_form_matches_quadrature(m2, g):
    spec = PotentialSpec(m2, g)
    p = tr.SimpleTrialParams(math.sqrt(m2), 1.0)
    direct = lpt.compute_E1(spec, p)
    assert lpt.e1_closed_form(spec) == pytest.approx(direct, rel=1e-11)


@settings(max_examples=15, deadline=None)
@given(a=st.floats(0.3, 3), b=st.floats(0.3, 2), c=st.floats(0, 2))
def test_variational_energy_is_rayleigh_quotient(a, b, c):
    spec = PotentialSpec(1.0, 2.0)
    p = tr.SimpleTrialParams(a, b, c)
    ray = lpt.rayleigh_quotient(spec, p)
    assert lpt.variational_energy(spec, p) == pytest.approx(ray, rel=1e-9)
    assert lpt.compute_E1(spec, p) == pytest.approx(ray, rel=1e-11)


def test_variational_bound_simple_family():
    spec = PotentialSpec(1.0, 2.0)
    exact = oracle.solve_shoot(spec, 0).energy
    for a, b in [(1.0, 1.0), (1.3, 0.8), (0.7, 1.5)]:
        assert lpt.rayleigh_quotient(spec, tr.SimpleTrialParams(a, b)) > exact


@pytest.fixture(scope="module")
def series_12():
    res = case1_result(1.0, 2.0)
    return lpt.run_series(PotentialSpec(1.0, 2.0), res.best_params, order=3)


def test_second_order_reaches_oracle(series_12):
    exact = oracle.solve_shoot(PotentialSpec(1.0, 2.0), 0).energy
    assert abs(series_12.partial_sums[1] - exact) < 1e-11
    assert abs(series_12.partial_sums[0] - exact) < 2e-9


def test_correction_equations_have_zero_mean(series_12):
    assert max(abs(z) for z in series_12.zero_mean_residuals) < 1e-13


def test_riccati_residual_falls_with_order(series_12):
    r = series_12.diagnostics.riccati_residual
    assert len(r) == 4
    assert r[1] < r[0] and r[2] < r[1]


def test_y1_is_odd_and_vanishes_at_origin(series_12):
    y1 = series_12.y_terms[0]
    x = np.linspace(0.1, 4.0, 9)
    assert np.allclose(y1(-x), -y1(x), atol=1e-15)
    assert abs(float(y1(np.array([0.0]))[0])) < 1e-14


def test_forward_and_backward_solutions_meet(series_12):
    assert series_12.diagnostics.switch_mismatch < 1e-8


def test_y1_maximum_is_small(series_12):
    d = series_12.diagnostics
    assert 0 < d.y1_max < 0.01
    assert 0 < d.y1_argmax < 5


def test_compute_yk_reproduces_stored_term(series_12):
    res = case1_result(1.0, 2.0)
    y2 = lpt.compute_yk(PotentialSpec(1.0, 2.0), res.best_params, 2, series_12)
    x = np.linspace(0.2, 3.0, 7)
    assert np.allclose(y2(x), series_12.y_terms[1](x), rtol=1e-10, atol=1e-15)


def test_compensated_sums_agree(series_12):
    res = case1_result(1.0, 2.0)
    comp = lpt.run_series(PotentialSpec(1.0, 2.0), res.best_params, order=2, compensated=True)
    assert comp.E_terms[2] == pytest.approx(series_12.E_terms[2], rel=1e-8, abs=1e-15)


def test_trial_with_nodes_is_rejected():
    spec = PotentialSpec(1.0, 2.0)
    base = tr.FullTrialParams(0.0, *tr.fix_case1_constraints(1.0, 2.0, 1.0), 0.5, 1.0)
    ex = tr.build_excited(tr.ExcitedSpec(1, 0, (1.0,), base), [tr.ExcitedSpec(0, 0, (), base)], 2.0)
    with pytest.raises(ValueError):
        lpt.run_series(spec, ex, order=2)
    # the first-order energy still follows from the Rayleigh quotient
    assert lpt.compute_E1(spec, ex) > oracle.solve_shoot(spec, 2).energy - 1e-9


def test_order_must_be_positive():
    with pytest.raises(ValueError):
        lpt.run_series(PotentialSpec(1.0, 1.0), tr.SimpleTrialParams(1.0, 1.0), order=0)
