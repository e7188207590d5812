import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riccati_lpt.model import PotentialSpec, eval_potential, symanzik_expand, symanzik_reduce


def test_potential_values():
    spec = PotentialSpec(-1.0, 2.0)
    x = np.array([0.0, 0.5, 1.0, -2.0])
    assert np.allclose(spec(x), -x**2 + 2 * x**4)
    assert eval_potential(spec, 3.0) == pytest.approx(-9 + 162)


@pytest.mark.parametrize("m2,g", [(1.0, -0.1), (0.0, 0.0), (-1.0, 0.0), (math.nan, 1.0), (1.0, math.inf)])
def test_invalid_specs_rejected(m2, g):
    with pytest.raises(ValueError):
        PotentialSpec(m2, g)


def test_m_only_for_single_well():
    assert PotentialSpec(4.0, 1.0).m == 2.0
    with pytest.raises(ValueError):
        PotentialSpec(-4.0, 1.0).m


def test_reduce_needs_coupling():
    with pytest.raises(ValueError):
        symanzik_reduce(PotentialSpec(1.0, 0.0))


@given(m2=st.floats(-50, 50), g=st.floats(1e-3, 1e3))
def test_reduce_expand_roundtrip(m2, g):
    spec = PotentialSpec(m2, g)
    red, ef, lf = symanzik_reduce(spec)
    assert red.g == 1.0
    back = symanzik_expand(red.m2, g)
    assert back.m2 == pytest.approx(m2, rel=1e-12, abs=1e-12)
    assert ef == pytest.approx(g ** (1 / 3))
    assert lf == pytest.approx(g ** (1 / 6))


@settings(max_examples=50)
@given(m2=st.floats(-10, 10), g=st.floats(0.01, 100), x=st.floats(-3, 3))
def test_reduction_maps_hamiltonians(m2, g, x):
    # V(x; spec) = e * V(x * l; reduced) with e = g^(1/3), l = g^(1/6)
    spec = PotentialSpec(m2, g)
    red, ef, lf = symanzik_reduce(spec)
    assert spec(x) == pytest.approx(ef * red(x * lf), rel=1e-10, abs=1e-10)
