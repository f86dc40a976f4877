import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from oncolattice.core import DEFAULT_PARAMS, Sigmoid
from oncolattice.integrator import IntegratorConfig, Termination, integrate, integrate_batch, sample_at
from oncolattice.local_model import rhs_dimensional


def logistic(r, K, y0, t):
    return K * y0 / (y0 + (K - y0) * np.exp(-r * t))


@given(r=st.floats(0.05, 2.0), y0=st.floats(1e-3, 2.0), T=st.floats(1.0, 30.0))
def test_logistic_against_closed_form(r, y0, T):
    tr = integrate(lambda y: r * y * (1 - y), [y0], IntegratorConfig(t_end=T, settle_norm=None))
    assert tr.terminated_by is Termination.HORIZON_REACHED
    assert tr.times[-1] == T
    assert tr.final[0] == pytest.approx(logistic(r, 1.0, y0, T), rel=1e-7)


def test_harmonic_oscillator_keeps_phase():
    rhs = lambda y: np.array([y[1], -y[0]])
    tr = integrate(rhs, [1.0, 0.0], IntegratorConfig(t_end=20 * math.pi, rtol=1e-10, atol=1e-12, settle_norm=None))
    assert np.allclose(tr.final, [1.0, 0.0], atol=1e-7)


def test_local_model_against_scipy():
    p = DEFAULT_PARAMS.replace(theta=Sigmoid(5.115e-3, 1.0, 0.08), gamma=Sigmoid(0.1, 0.9, 0.08))
    y0 = [1e4, 100.0, 4.3751]
    ours = integrate(lambda y: rhs_dimensional(y, p), y0, IntegratorConfig(t_end=100.0, settle_norm=None))
    ref = solve_ivp(lambda t, y: rhs_dimensional(y, p), (0, 100), y0, method="DOP853", rtol=1e-11, atol=1e-8,
                    dense_output=True)
    t = np.linspace(0, 100, 41)
    assert np.allclose(sample_at(ours, t), ref.sol(t).T, rtol=1e-5, atol=1e-3)


def test_hermite_sampling_hits_nodes_and_interpolates():
    tr = integrate(lambda y: -y, [1.0], IntegratorConfig(t_end=5.0, settle_norm=None))
    assert np.array_equal(sample_at(tr, tr.times), tr.states)
    t = np.linspace(0, 5, 101)
    assert np.allclose(sample_at(tr, t)[:, 0], np.exp(-t), rtol=1e-6)
    assert np.ndim(sample_at(tr, 2.5)) == 1
    with pytest.raises(ValueError):
        sample_at(tr, 5.1)


def test_settles_early():
    cfg = IntegratorConfig(t_end=1e4, settle_norm=1e-9, settle_duration=5.0)
    tr = integrate(lambda y: -y, [1.0], cfg)
    assert tr.terminated_by is Termination.STEADY_STATE
    assert tr.times[-1] < 1e4
    assert abs(tr.final[0]) < 1e-9


def test_blow_up_is_reported_not_raised():
    tr = integrate(lambda y: y * y, [1.0], IntegratorConfig(t_end=2.0, settle_norm=None))
    assert tr.terminated_by is Termination.STEP_FAILURE
    assert tr.times[-1] < 1.0 + 1e-6
    assert tr.message


def test_non_finite_initial_derivative():
    tr = integrate(lambda y: np.full_like(y, np.nan), [1.0], IntegratorConfig(t_end=1.0))
    assert tr.terminated_by is Termination.STEP_FAILURE


def test_bad_inputs():
    with pytest.raises(ValueError):
        integrate(lambda y: y, [[1.0]], IntegratorConfig(t_end=1.0))
    with pytest.raises(ValueError):
        IntegratorConfig(t_end=-1.0)
    with pytest.raises(ValueError):
        integrate_batch(lambda Y, rows: Y, [1.0, 2.0], IntegratorConfig(t_end=1.0))


def test_max_steps():
    tr = integrate(lambda y: np.array([y[1], -y[0]]), [1.0, 0.0], IntegratorConfig(t_end=1e3, max_steps=10))
    assert tr.terminated_by is Termination.STEP_FAILURE


def test_batch_rows_are_independent():
    r = np.array([0.3, 1.0, 2.5])
    Y0 = np.array([[0.01], [0.5], [1.5]])
    cfg = IntegratorConfig(t_end=7.0, settle_norm=None)
    res = integrate_batch(lambda Y, rows: r[rows, None] * Y * (1 - Y), Y0, cfg)
    alone = integrate_batch(lambda Y, rows: r[1:2][rows, None] * Y * (1 - Y), Y0[1:2], cfg)
    assert res.y[1, 0] == alone.y[0, 0]
    assert np.allclose(res.y[:, 0], logistic(r, 1.0, Y0[:, 0], 7.0), rtol=1e-7)
    assert np.all(res.t == 7.0)
    # running extremes over accepted steps
    assert np.allclose(res.obs_max[:, 0], np.maximum(Y0[:, 0], res.y[:, 0]))


def test_batch_matches_single_trajectory():
    rhs = lambda y: np.array([y[1], -0.1 * y[1] - y[0]])
    cfg = IntegratorConfig(t_end=10.0, settle_norm=None)
    single = integrate(rhs, [1.0, 0.0], cfg)
    batch = integrate_batch(lambda Y, rows: np.stack([Y[:, 1], -0.1 * Y[:, 1] - Y[:, 0]], axis=1),
                            [[1.0, 0.0]], cfg)
    assert np.array_equal(batch.y[0], single.final)
    assert batch.n_accepted[0] == single.n_accepted


def test_batch_reports_failed_rows():
    Y0 = np.array([[1.0], [-1.0]])
    res = integrate_batch(lambda Y, rows: Y * Y, Y0, IntegratorConfig(t_end=2.0))
    assert res.status[0] is Termination.STEP_FAILURE
    assert res.status[1] is Termination.HORIZON_REACHED
    assert 0 in res.messages
