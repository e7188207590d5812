import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riccati_lpt import trial as tr


def _num_deriv(f, x, h=1e-5):
    return (f(x + h) - f(x - h)) / (2 * h)


full_params = st.builds(
    tr.FullTrialParams,
    A=st.floats(-2, 2), a=st.floats(-2, 3), b=st.floats(0.5, 2), c=st.floats(-1.5, 1.5), d=st.floats(0.3, 3))


@settings(max_examples=60, deadline=None)
@given(p=full_params, g=st.floats(0.2, 3), x=st.floats(-3, 3))
def test_full_y0_is_minus_log_derivative(p, g, x):
    y_num = -_num_deriv(lambda t: tr.log_abs_psi(p, g, np.array(t)), x)
    assert tr.y0(p, g, x) == pytest.approx(y_num, rel=1e-6, abs=1e-6)


@settings(max_examples=60, deadline=None)
@given(p=full_params, g=st.floats(0.2, 3), x=st.floats(-3, 3))
def test_full_y0_prime_matches_difference(p, g, x):
    d_num = _num_deriv(lambda t: tr.y0(p, g, np.array(t)), x)
    assert tr.y0_prime(p, g, x) == pytest.approx(d_num, rel=1e-6, abs=1e-5)


@settings(max_examples=40, deadline=None)
@given(a=st.floats(0.1, 3), b=st.floats(0.1, 2), c=st.floats(0, 3), g=st.floats(0.1, 3),
       x=st.floats(0.05, 3) | st.floats(-3, -0.05))
def test_simple_family_derivatives(a, b, c, g, x):
    p = tr.SimpleTrialParams(a, b, c)
    y_num = -_num_deriv(lambda t: tr.log_abs_psi(p, g, np.array(t)), x)
    assert tr.y0(p, g, x) == pytest.approx(y_num, rel=1e-6, abs=1e-6)
    assert tr.y0_prime(p, g, x) == pytest.approx(_num_deriv(lambda t: tr.y0(p, g, np.array(t)), x),
                                                 rel=1e-6, abs=1e-5)


def test_v0_of_quartic_exponential():
    # psi = exp(-x^4): y0 = 4x^3 and V0 = 16x^6 - 12x^2
    x = np.linspace(-2, 2, 41)
    v0 = tr.v0_from_y0(lambda t: 4 * t**3, lambda t: 12 * t**2, x)
    assert np.allclose(v0, 16 * x**6 - 12 * x**2, rtol=0, atol=1e-12)


def test_gaussian_trial_is_harmonic():
    p = tr.SimpleTrialParams(a=1.7, b=0.0)
    x = np.linspace(-3, 3, 13)
    assert np.allclose(tr.v0(p, 0.0, x), 1.7**2 * x**2 - 1.7)


def test_parameter_validation():
    with pytest.raises(ValueError):
        tr.SimpleTrialParams(1.0, -1.0)
    with pytest.raises(ValueError):
        tr.SimpleTrialParams(1.0, 1.0, -0.5)
    with pytest.raises(ValueError):
        tr.FullTrialParams(0.0, 1.0, 1.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        tr.check_normalizable(tr.SimpleTrialParams(1.0, 0.0), 1.0)
    with pytest.raises(ValueError):
        tr.check_normalizable(tr.SimpleTrialParams(-1.0, 0.0), 0.0)
    base = tr.FullTrialParams(0.0, 1.0, 4 / 3, 1.0, 1.0)
    with pytest.raises(ValueError):
        tr.ExcitedSpec(2, 0, (1.0, 2.0), base)
    with pytest.raises(ValueError):
        tr.ExcitedSpec(1, 0, (), base)
    with pytest.raises(ValueError):
        tr.ExcitedSpec(1, 0, (-1.0,), base)


@pytest.mark.parametrize("m2,g", [(1.0, 2.0), (0.0, 1.0), (-1.0, 2.0), (-10.0, 1.0)])
def test_case1_reproduces_growing_asymptotics(m2, g):
    # exact y = sqrt(g) x^2 + m2 / (2 sqrt(g)) + 1/x + O(1/x^2)
    d = 1.3
    a, b = tr.fix_case1_constraints(m2, g, d)
    p = tr.FullTrialParams(0.4, a, b, 0.8, d)
    x = np.array([200.0, 400.0])
    resid = tr.y0(p, g, x) - (math.sqrt(g) * x**2 + m2 / (2 * math.sqrt(g)) + 1 / x)
    assert np.all(np.abs(resid * x) < 50 / x)  # remainder is O(1/x^2)
    assert tr.case1_d_from_a(m2, a) == pytest.approx(d * d)


@settings(max_examples=30, deadline=None)
@given(p=full_params, g=st.floats(0.2, 3))
def test_E_exp_is_small_x_slope(p, g):
    h = 1e-5
    slope = (tr.y0(p, g, h) - tr.y0(p, g, -h)) / (2 * h)
    assert tr.extract_E_exp(p, g) == pytest.approx(slope, rel=1e-7, abs=1e-7)


@pytest.mark.parametrize("k,p", [(0, 1), (1, 0), (1, 1)])
def test_excited_v0_is_psi_second_derivative_ratio(k, p):
    g = 1.5
    base = tr.FullTrialParams(0.3, 0.9, 4 / 3, 0.7, 1.2)
    s = tr.ExcitedSpec(k, p, tuple([0.8] * k), base)
    x = np.array([0.37, 0.71, 1.3, 2.1, -1.1])
    h = 1e-4

    def psi(t):
        lg, sg = tr.psi0_eval(s, g, np.asarray(t, dtype=float))
        return sg * np.exp(lg)

    ratio = (psi(x + h) - 2 * psi(x) + psi(x - h)) / h**2 / psi(x)
    assert np.allclose(tr.v0(s, g, x), ratio, rtol=1e-5, atol=1e-5)
    assert s.node_count == 2 * k + p


def test_excited_v0_regular_at_origin_for_odd_state():
    base = tr.FullTrialParams(0.3, 0.9, 4 / 3, 0.7, 1.2)
    s = tr.ExcitedSpec(0, 1, (), base)
    v = tr.v0(s, 1.0, np.array([0.0, 1e-9, 1e-6]))
    assert np.all(np.isfinite(v)) and abs(v[0] - v[2]) < 1e-8


def test_orthogonality_fixes_the_root():
    g = 2.0
    base = tr.FullTrialParams(0.78, 1.79, 4 / 3, 0.93, 1.54)
    ground = tr.ExcitedSpec(0, 0, (), base)
    ex = tr.build_excited(tr.ExcitedSpec(1, 0, (1.0,), base), [ground], g)
    ov, n1, n2 = tr.overlap(ex, ground, g)
    assert abs(ov) < 1e-12 * n1 * n2
    assert len(ex.nodes) == 2 and ex.roots[0] > 0
    # states of the other parity are orthogonal without constraints
    odd = tr.ExcitedSpec(0, 1, (), base)
    assert abs(tr.overlap(odd, ground, g)[0]) < 1e-14
