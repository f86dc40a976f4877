import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oncolattice.core import (DEFAULT_PARAMS, Constant, LocalState, NondimParams, Scaled, Sigmoid, eval_response,
                              eval_response_deriv, is_constant, nondimensionalize, nondimensionalize_state,
                              redimension_state)
from oncolattice.local_model import rhs_dimensional, rhs_nondim


def test_table_constants_nondimensional():
    nd = nondimensionalize(DEFAULT_PARAMS)
    # frozen from direct arithmetic on the table entries
    assert nd.alpha == pytest.approx(0.1, rel=1e-15)
    assert nd.q1 == pytest.approx(5.47e-5 * 1e6 / 0.3954, rel=1e-14)
    assert nd.beta == pytest.approx(5.0976 / 0.3954, rel=1e-14)
    assert nd.q1 == pytest.approx(138.341, abs=5e-4)
    # quoted to four decimals by truncation
    assert math.floor(nd.beta * 1e4) / 1e4 == 12.8922
    assert nd.theta.rate(0.3) == pytest.approx(1.0 / 0.3954, rel=1e-14)


def test_sigmoid_endpoints_and_monotone():
    s = Sigmoid(0.1, 0.9, 0.08)
    assert s.rate(0.0) == pytest.approx(0.1, rel=1e-15)
    assert s.rate(1e4) == pytest.approx(0.9, rel=1e-12)
    c = np.linspace(0.0, 200.0, 501)
    assert np.all(np.diff(s.rate(c)) > 0)
    assert s.at_zero == 0.1 and s.limit == 0.9


@pytest.mark.parametrize("bad", [dict(v0=0.5, vinf=0.4, k=1.0), dict(v0=-0.1, vinf=1.0, k=1.0),
                                 dict(v0=0.1, vinf=1.0, k=0.0)])
def test_sigmoid_rejects_bad_shapes(bad):
    with pytest.raises(ValueError):
        Sigmoid(**bad)


def test_constant_rejects_negative_and_keeps_shape():
    with pytest.raises(ValueError):
        Constant(-1.0)
    c = np.array([0.0, 3.0])
    assert Constant(0.7).rate(c).shape == (2,)
    assert np.all(Constant(0.7).slope(c) == 0.0)


def test_negative_oxygen_rejected():
    with pytest.raises(ValueError):
        eval_response(Sigmoid(0.1, 0.9, 0.08), -1e-3)
    with pytest.raises(ValueError):
        eval_response_deriv(Constant(1.0), np.array([1.0, -2.0]))


@given(v0=st.floats(0.0, 1.0), span=st.floats(1e-3, 2.0), k=st.floats(1e-3, 2.0), c=st.floats(0.0, 50.0))
def test_sigmoid_slope_is_logistic_identity(v0, span, k, c):
    s = Sigmoid(v0, v0 + span, k)
    v = s.rate(c)
    assert 0.0 <= s.slope(c) <= k * s.vinf / 4 * (1 + 1e-12)
    assert s.slope(c) == pytest.approx(k * v * (1 - v / s.vinf), rel=1e-12, abs=1e-300)


def test_is_constant_sees_through_scaling():
    assert is_constant(Scaled(Constant(1.0), 2.0, 3.0))
    assert not is_constant(Scaled(Sigmoid(0.1, 0.2, 1.0), 2.0, 3.0))


@given(u=st.floats(0, 2e6), n=st.floats(0, 2e6), c=st.floats(0, 3e3))
def test_nondim_rhs_is_rescaled_dimensional_rhs(u, n, c):
    p = DEFAULT_PARAMS.replace(theta=Sigmoid(5.115e-3, 1.0, 0.08), gamma=Sigmoid(0.1, 0.9, 0.008))
    nd = nondimensionalize(p)
    s = np.array([u, n, c])
    dim = rhs_dimensional(s, p)
    lhs = rhs_nondim(nondimensionalize_state(s, p), nd)
    # d/dtau = (1/r1) d/dt, states scaled by K, K and phi/beta
    expect = dim / np.array([p.K, p.K, p.phi / p.beta]) / p.r1
    assert np.allclose(lhs, expect, rtol=1e-10, atol=1e-12)


@given(x=st.floats(0, 1), y=st.floats(0, 1), z=st.floats(0, 1), tau=st.floats(0, 100))
def test_state_scaling_round_trip(x, y, z, tau):
    s, t = redimension_state([x, y, z], DEFAULT_PARAMS, tau)
    back, tau2 = nondimensionalize_state(s, DEFAULT_PARAMS, t)
    assert np.allclose(back, [x, y, z], rtol=1e-14, atol=0)
    assert tau2 == pytest.approx(tau, rel=1e-14, abs=1e-300)


def test_local_state_round_trip_and_validation():
    ls = redimension_state(LocalState(0.5, 0.25, 1.0, nondim=True), DEFAULT_PARAMS)
    assert isinstance(ls, LocalState) and not ls.nondim
    assert ls.u == pytest.approx(5e5) and ls.c == pytest.approx(DEFAULT_PARAMS.phi / DEFAULT_PARAMS.beta)
    with pytest.raises(ValueError):
        LocalState(-1.0, 0.0, 0.0)


def test_parameter_validation():
    with pytest.raises(ValueError):
        DEFAULT_PARAMS.replace(r2=0.5)  # infected cells may not outgrow uninfected ones
    with pytest.raises(ValueError):
        NondimParams(r=1.2, alpha=0.1, beta=1, q1=1, q2=1, theta=Constant(1), gamma=Constant(1))


def test_replace_keeps_other_fields():
    p = DEFAULT_PARAMS.replace(phi=0.0)
    assert p.phi == 0.0 and p.K == DEFAULT_PARAMS.K and p.theta == DEFAULT_PARAMS.theta
    assert math.isinf(nondimensionalize(DEFAULT_PARAMS.replace(beta=0.0)).theta.arg_scale)
