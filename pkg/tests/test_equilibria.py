import math

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from oncolattice.core import DEFAULT_PARAMS, Constant, NondimParams, Sigmoid, nondimensionalize
from oncolattice.equilibria import (Basis, Verdict, bisect, classify_2d, coexistence_2d, infected_only_bound,
                                    interior_3d, numeric_verdict, residual_2d, scan_roots, tumour_dominant_3d,
                                    tumour_free_3d, uninfected_free_3d)
from oncolattice.local_model import Params2D, jacobian_2d, jacobian_3d, rhs_nondim

R, TH, GA = 0.531107, 2.52908, 1.29362


def _kinds(p):
    return {st.kind: v for st, v in classify_2d(p)}


def _mp_coexistence(p: Params2D, guess):
    """High-precision root of the two nullcline equations divided by x and y."""
    mpmath.mp.dps = 40
    r, a, th, ga = (mpmath.mpf(v) for v in (p.r, p.alpha, p.theta, p.gamma))
    f1 = lambda x, y: 1 - x - y - th * y / (a + y)
    f2 = lambda x, y: r * (1 - x - y) + th * x / (a + y) - ga
    x, y = mpmath.findroot([f1, f2], (mpmath.mpf(guess[0]), mpmath.mpf(guess[1])))
    return float(x), float(y)


def test_fig1b_coexistence_against_high_precision_root():
    p = Params2D(R, 1.0, TH, GA)
    co = coexistence_2d(p)
    assert co is not None and co.x > 0 and co.y > 0
    assert residual_2d(co, p) < 1e-10
    x, y = _mp_coexistence(p, (co.x, co.y))
    assert co.x == pytest.approx(x, rel=1e-12) and co.y == pytest.approx(y, rel=1e-12)
    assert _kinds(p)["coexistence"].stable


def test_fig1a_tumour_only_stable():
    k = _kinds(Params2D(R, 10.0, TH, GA))
    assert k["tumour_only"].stable
    assert "coexistence" not in k and "infected_only" not in k  # gamma > r


def test_table_alpha_tumour_only_unstable():
    k = _kinds(Params2D(R, 0.1, TH, GA))
    assert k["tumour_only"].verdict is Verdict.UNSTABLE
    assert k["origin"].verdict is Verdict.UNSTABLE


def test_infected_only_state_and_bound():
    p = Params2D(0.5311, 0.1, 0.9, 0.3)
    k = {st.kind: (st, v) for st, v in classify_2d(p)}
    st_, v = k["infected_only"]
    assert st_.y == pytest.approx((0.5311 - 0.3) / 0.5311, rel=1e-15)
    assert v.stable
    assert infected_only_bound(p) == pytest.approx(0.3 * (0.1 / 0.2311 + 1 / 0.5311), rel=1e-14)
    assert math.isinf(infected_only_bound(Params2D(0.3, 0.1, 1.0, 0.4)))


@given(r=st.floats(0.05, 0.95), a=st.floats(0.02, 3.0), th=st.floats(0.0, 4.0), ga=st.floats(0.0, 2.0))
def test_exactly_one_stable_state_off_the_boundaries(r, a, th, ga):
    p = Params2D(r, a, th, ga)
    b = infected_only_bound(p)
    assume(abs(th / a - ga) > 1e-4 and abs(r - ga) > 1e-4 and (math.isinf(b) or abs(th - b) > 1e-4))
    found = classify_2d(p)
    assert sum(v.stable for _, v in found) == 1
    for st_, v in found:
        assert residual_2d(st_, p) < 1e-10
        assert min(st_.x, st_.y) >= 0
        assert v.verdict is numeric_verdict(jacobian_2d(st_.x, st_.y, p)).verdict


def test_marginal_band():
    p = Params2D(0.5, 0.1, 0.03, 0.3)  # theta = alpha gamma exactly
    assert _kinds(p)["tumour_only"].verdict is Verdict.MARGINAL


def test_verdict_rendering():
    v = _kinds(Params2D(R, 0.1, TH, GA))["tumour_only"]
    assert str(v) == "unstable (θ > αγ)"
    assert v.basis is Basis.ANALYTIC


def test_three_variable_boundary_states():
    nd = nondimensionalize(DEFAULT_PARAMS)
    st_, v = tumour_dominant_3d(nd)
    assert st_.z == pytest.approx(12.8922 / (12.8922 + 138.341), abs=1e-5)
    assert st_.z == pytest.approx(nd.beta / (nd.beta + nd.q1), rel=1e-15)
    assert v.verdict is Verdict.UNSTABLE
    assert np.abs(rhs_nondim(st_.point, nd)).max() < 1e-12
    assert numeric_verdict(jacobian_3d(st_.point, nd)).verdict is Verdict.UNSTABLE
    st0, v0 = tumour_free_3d(nd)
    assert np.abs(rhs_nondim(st0.point, nd)).max() == 0.0 and not v0.stable


def _grid_scan_oracle(p: NondimParams, n=1_000_000):
    """Sign changes of the oxygen balance on a fine grid, refined by plain bisection."""
    b, q2, r = p.beta, p.q2, p.r
    lo = b / (b + q2)
    f = lambda z: p.gamma.rate(z) - r * (1 + b / q2 - b / (q2 * z))
    z = np.linspace(lo, 1.0, n + 1)[1:]
    v = f(z)
    idx = np.flatnonzero(np.sign(v[:-1]) != np.sign(v[1:]))
    roots = []
    for i in idx:
        a, c = z[i], z[i + 1]
        for _ in range(200):
            m = 0.5 * (a + c)
            if np.sign(f(m)) == np.sign(f(a)):
                a = m
            else:
                c = m
        roots.append(0.5 * (a + c))
    return roots


def test_uninfected_free_with_weak_death_rate():
    p = nondimensionalize(DEFAULT_PARAMS.replace(theta=Sigmoid(0.1, 0.12, 0.08), gamma=Sigmoid(0.005115, 0.009115, 0.008)))
    assert p.gamma.limit < p.r
    found = uninfected_free_3d(p)
    oracle = _grid_scan_oracle(p)
    assert len(found) == len(oracle) >= 1
    for (st_, v), z in zip(found, oracle):
        assert st_.z == pytest.approx(z, rel=1e-9)
        assert np.abs(rhs_nondim(st_.point, p)).max() < 1e-10
        num = numeric_verdict(jacobian_3d(st_.point, p))
        assert v.verdict is num.verdict


def test_uninfected_free_constant_closed_form():
    p = nondimensionalize(DEFAULT_PARAMS.replace(gamma=Constant(0.05)))
    (st_, v), = uninfected_free_3d(p)
    assert np.abs(rhs_nondim(st_.point, p)).max() < 1e-12
    with pytest.raises(ValueError):
        uninfected_free_3d(p.replace(q2=0.0))


def test_interior_newton_from_trajectory_end():
    p = nondimensionalize(DEFAULT_PARAMS.replace(theta=Sigmoid(5.115e-3, 1.0, 0.08), gamma=Sigmoid(0.1, 0.9, 0.008)))
    st_, v = interior_3d(p, [0.1, 0.05, 0.4])
    assert np.abs(rhs_nondim(st_.point, p)).max() < 1e-12
    assert v.basis is Basis.NUMERIC
    assert min(st_.point) > 0


def test_bisect_and_scan():
    assert bisect(lambda x: x * x - 2, 0.0, 2.0) == pytest.approx(math.sqrt(2), rel=1e-12)
    with pytest.raises(ValueError):
        bisect(lambda x: x * x + 1, -1.0, 1.0)
    roots = scan_roots(lambda x: np.sin(x), 0.5, 10.0, n=1000)
    assert np.allclose(roots, [math.pi, 2 * math.pi, 3 * math.pi], rtol=1e-12)
