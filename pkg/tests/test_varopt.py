import math

import numpy as np
import pytest

from conftest import case1_result
from riccati_lpt import lpt, oracle, varopt
from riccati_lpt import trial as tr
from riccati_lpt.model import PotentialSpec

SPEC = PotentialSpec(1.0, 2.0)


def _simple_problem(**kw):
    return varopt.OptimizationProblem(SPEC, "simple", ("a", "b"), {}, **kw)


def test_simple_family_optimum_is_stationary():
    res = varopt.minimize(_simple_problem())
    a, b = res.best_params.a, res.best_params.b
    for da, db in [(1e-3, 0), (-1e-3, 0), (0, 1e-3), (0, -1e-3)]:
        e = lpt.variational_energy(SPEC, tr.SimpleTrialParams(a + da, b + db))
        assert e >= res.best_E1 - 1e-12
    assert res.converged


def test_same_seed_same_result():
    r1 = varopt.minimize(_simple_problem(seed=3, restarts=2))
    r2 = varopt.minimize(_simple_problem(seed=3, restarts=2))
    assert r1.best_E1 == r2.best_E1
    assert r1.evals_used == r2.evals_used


def test_every_evaluation_is_an_upper_bound(table_spec):
    res = case1_result(*table_spec)
    exact = oracle.solve_shoot(PotentialSpec(*table_spec), 0).energy
    energies = np.array([e for _, e in res.trajectory])
    assert np.all(energies[np.isfinite(energies)] >= exact - 1e-9)
    assert res.best_E1 == min(energies)


def test_case1_pins_hold(table_spec):
    p = case1_result(*table_spec).best_params
    m2, g = table_spec
    assert p.b == pytest.approx(4.0 / 3.0)
    assert p.a == pytest.approx(p.d**2 / 3.0 + m2)


def test_case2_not_above_case1():
    c1 = case1_result(1.0, 2.0)
    c2 = varopt.case2_optimize(SPEC, init=varopt.params_dict(c1.best_params), restarts=1)
    assert c2.best_E1 <= c1.best_E1 + 1e-11
    assert c2.best_E1 >= oracle.solve_shoot(SPEC, 0).energy - 1e-9


def test_fixed_d_search():
    d = case1_result(1.0, 2.0).best_params.d
    res = varopt.case1_optimize(SPEC, d=d, init={"A": 0.0, "c": 0.5}, restarts=1)
    assert res.best_params.d == pytest.approx(d)
    assert res.best_E1 >= case1_result(1.0, 2.0).best_E1 - 1e-11


@pytest.mark.parametrize("kwargs", [
    dict(family="nope"),
    dict(family="simple", free_params=("A",), pinned_params={}),
    dict(family="full", free_params=("a", "c"), pinned_params="case1"),
    dict(family="simple", free_params=("a",), pinned_params="case1"),
    dict(family="full", free_params=("A",), pinned_params={"A": 1.0}),
    dict(family="full", free_params=(), pinned_params={}),
])
def test_problem_validation(kwargs):
    with pytest.raises(ValueError):
        varopt.OptimizationProblem(SPEC, **kwargs)


def test_non_finite_start_is_rejected():
    # a growing Gaussian is not normalizable
    with pytest.raises(ValueError):
        varopt.minimize(varopt.OptimizationProblem(SPEC, "simple", ("a",), {"b": 0.0}, init={"a": -1.0}))
    # b is searched in log space and must start positive
    with pytest.raises(ValueError):
        varopt.minimize(varopt.OptimizationProblem(SPEC, "simple", ("a", "b"), {}, init={"a": 1.0, "b": -1.0}))


def test_case1_needs_anharmonic_term():
    with pytest.raises(ValueError):
        varopt.case1_optimize(PotentialSpec(1.0, 0.0))


def test_params_dict_roundtrip():
    p = tr.FullTrialParams(0.1, 1.2, 4 / 3, 0.5, 1.1)
    assert tr.FullTrialParams(**varopt.params_dict(p)) == p
    s = tr.SimpleTrialParams(1.0, 0.5, 0.2)
    assert varopt.params_dict(s) == {"a": 1.0, "b": 0.5, "c": 0.2}


def test_default_init_scales():
    init = varopt.default_init(PotentialSpec(-4.0, 8.0), "full")
    assert init["d"] == pytest.approx(2.0)
    assert init["b"] == pytest.approx(4.0 / 3.0)
    assert math.isfinite(init["a"])
