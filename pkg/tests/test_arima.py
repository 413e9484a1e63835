import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modelgrowth.forecasters import ArimaOrder, ForecasterError, arima_fit, auto_arima
from modelgrowth.forecasters.arima import ROOT_RADIUS, aic, candidate_orders
from modelgrowth.kernels import arima as kern


def ar1(phi, n, seed, c=0.0):
    r = np.random.default_rng(seed)
    e = r.normal(0, 1, n + 100)
    y = np.zeros(n + 100)
    for t in range(1, y.size):
        y[t] = c + phi * y[t - 1] + e[t]
    return y[100:]


def test_order_bounds():
    with pytest.raises(ValueError):
        ArimaOrder(6, 0, 0)
    with pytest.raises(ValueError):
        ArimaOrder(0, 3, 0)
    assert ArimaOrder(2, 1, 1).k == 4


def test_random_walk_orders():
    y = np.array([3.0, 5.0, 4.0, 8.0, 9.0, 12.0])
    f = arima_fit(y, (0, 1, 0), intercept=False)
    assert f.forecast(3).tolist() == [12.0, 12.0, 12.0]
    f = arima_fit(y, (0, 1, 0), intercept=True)
    drift = np.mean(np.diff(y))
    assert np.allclose(f.forecast(3), 12.0 + drift * np.arange(1, 4), atol=1e-9)


def test_white_noise_mean():
    y = np.random.default_rng(1).normal(5, 2, 50)
    f = arima_fit(y, (0, 0, 0))
    assert np.allclose(f.forecast(4), y.mean(), atol=1e-9)


def test_ar1_recovery():
    f = arima_fit(ar1(0.7, 500, 42), (1, 0, 0))
    assert 0.55 <= f.phi[0] <= 0.85


def test_arma_fit_near_truth():
    r = np.random.default_rng(5)
    e = r.normal(0, 1, 601)
    y = np.zeros(601)
    for t in range(1, 601):
        y[t] = 0.5 * y[t - 1] + e[t] + 0.4 * e[t - 1]
    f = arima_fit(y[1:], (1, 0, 1))
    assert abs(f.phi[0] - 0.5) < 0.15 and abs(f.theta[0] - 0.4) < 0.15


def test_fitted_polynomials_are_stable():
    for seed in range(5):
        y = np.cumsum(np.random.default_rng(seed).normal(1, 1, 60))
        f = auto_arima(y)
        assert kern.ar_stable_numpy(f.phi, 1.0)
        assert kern.ar_stable_numpy(-f.theta, 1.0)
        assert len(f.phi) == f.order.p and len(f.theta) == f.order.q


def test_too_short():
    with pytest.raises(ForecasterError):
        auto_arima(np.arange(9.0))
    with pytest.raises(ForecasterError):
        arima_fit(np.arange(4.0), (2, 1, 0))


def test_aic_formula():
    assert aic(50.0, 100, 3) == pytest.approx(100 * np.log(0.5) + 6)
    assert all(o.p + o.q + o.d + 1 < 12 for o in candidate_orders(12))


def test_trend_picks_differencing_and_noise_does_not():
    t = np.arange(150)
    trend = 5 + 0.5 * t + np.random.default_rng(2).normal(0, 1, t.size)
    assert auto_arima(trend).order.d >= 1
    picks = [auto_arima(np.random.default_rng(s).normal(10, 1, 200)).order.d for s in range(6)]
    assert picks.count(0) >= 5


@settings(max_examples=15)
@given(st.integers(-10**6, 10**6), st.integers(0, 2**31))
def test_translation_covariance(c, seed):
    # sizes are counts, so the property is checked on integer series and shifts
    y = np.cumsum(np.random.default_rng(seed).integers(-2, 5, 40)).astype(float) + 100
    base = auto_arima(y)
    shifted = auto_arima(y + c)
    assert shifted.order == base.order
    assert np.allclose(shifted.forecast(6), base.forecast(6) + c, rtol=0, atol=1e-9 * (1 + abs(c)))


def test_prefix_and_determinism():
    y = np.cumsum(np.random.default_rng(9).normal(1, 1, 50))
    a, b = auto_arima(y), auto_arima(y)
    assert np.array_equal(a.forecast(30), b.forecast(30))
    assert np.array_equal(a.forecast(4), a.forecast(30)[:4])


def test_schur_cohn_matches_roots():
    r = np.random.default_rng(0)
    for _ in range(300):
        a = r.uniform(-1.5, 1.5, r.integers(1, 6))
        roots = np.roots(np.r_[-a[::-1], 1.0])
        expect = bool(np.all(np.abs(roots) > ROOT_RADIUS))
        assert kern.ar_stable(a, ROOT_RADIUS) == expect
        assert kern.ar_stable_numpy(a, ROOT_RADIUS) == expect


def test_css_kernels_agree():
    r = np.random.default_rng(4)
    w = r.normal(0, 1, 80)
    phi, theta = np.array([0.4, -0.2]), np.array([0.3])
    a = kern.css_residuals_jit(w, 0.1, phi, theta)
    b = kern.css_residuals_numpy(w, 0.1, phi, theta)
    assert np.allclose(a, b, atol=1e-12)
    x = np.array([0.1, 0.4, -0.2, 0.3])
    assert kern.css_objective_jit(x, w, 2, 1, True, 2, 1.0) == pytest.approx(
        kern.css_objective_numpy(x, w, 2, 1, True, 2, 1.0), rel=1e-12)


def test_nelder_mead_kernels_agree_on_optimum():
    w = ar1(0.6, 200, 8)
    w = w - w.mean()
    sim = np.array([[0.0, 0.0, 0.0], [0.1, 0.0, 0.0], [0.0, 0.1, 0.0], [0.0, 0.0, 0.1]])
    args = (sim, w, 1, 1, True, 1, ROOT_RADIUS, 1e-8, 1e-12, 2000, 4000, False)
    xj, fj, _, okj = kern.css_nelder_mead_jit(*args)
    xn, fn, _, okn = kern.css_nelder_mead_numpy(*args)
    assert okj and okn
    assert fj == pytest.approx(fn, rel=1e-6)
    assert np.allclose(xj, xn, atol=1e-3)
