import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from modelgrowth.forecasters import ForecasterError, holt_fit
from modelgrowth.forecasters.holt import holt_sse
from modelgrowth.kernels.holt import holt_grid_jit, holt_grid_numpy


def hand_holt(y, alpha, beta):
    """Plain-loop Holt recursion; returns (sse, level, trend)."""
    level, trend = y[0], y[1] - y[0]
    sse = 0.0
    for t in range(1, len(y)):
        err = y[t] - (level + trend)
        sse += err * err
        prev = level
        level = alpha * y[t] + (1 - alpha) * (level + trend)
        trend = beta * (level - prev) + (1 - beta) * trend
    return sse, level, trend


def test_constant_series():
    f = holt_fit([5, 5, 5, 5, 5])
    assert np.allclose(f.forecast(3), [5, 5, 5], atol=1e-12)


def test_exact_line():
    y = 2.0 * np.arange(1, 21)
    fc = holt_fit(y).forecast(5)
    assert np.allclose(fc, [42, 44, 46, 48, 50], rtol=0.01)


def test_too_short():
    with pytest.raises(ForecasterError):
        holt_fit([1, 2])


def test_matches_duplicate_implementation():
    r = np.random.default_rng(3)
    y = 100 + np.cumsum(0.8 + r.normal(0, 1, 80))
    f = holt_fit(y)
    sse, level, trend = hand_holt(y, f.alpha, f.beta)
    assert abs(f.level - level) < 1e-9 and abs(f.trend - trend) < 1e-9
    assert abs(f.diagnostics["sse"] - sse) < 1e-9 * max(1.0, sse)
    assert np.allclose(f.forecast(10), level + trend * np.arange(1, 11), rtol=0, atol=1e-9)
    assert 0 < f.alpha < 1 and 0 < f.beta < 1


def test_search_beats_every_grid_point():
    r = np.random.default_rng(11)
    y = 50 + np.cumsum(r.normal(0.5, 2, 60))
    f = holt_fit(y)
    grid = np.round(np.arange(0.05, 1.0, 0.05), 10)
    best_grid = min(hand_holt(y, a, b)[0] for a in grid for b in grid)
    assert f.diagnostics["sse"] <= best_grid + 1e-9


def test_fixed_constants_skip_search():
    y = np.arange(10.0) ** 1.5
    f = holt_fit(y, alpha=0.3, beta=0.2)
    assert (f.alpha, f.beta) == (0.3, 0.2)
    assert abs(holt_sse(y, 0.3, 0.2) - hand_holt(y, 0.3, 0.2)[0]) < 1e-9


def test_grid_kernels_agree():
    r = np.random.default_rng(0)
    y = np.cumsum(r.normal(1, 1, 40))
    a = np.linspace(0.05, 0.95, 7)
    b = np.linspace(0.1, 0.9, 5)
    for u, v in zip(holt_grid_jit(y, a, b), holt_grid_numpy(y, a, b)):
        assert np.allclose(u, v, rtol=1e-12, atol=1e-12)


@given(st.integers(-10**6, 10**6), st.integers(0, 2**31))
def test_translation_covariance(c, seed):
    y = np.cumsum(np.random.default_rng(seed).integers(-1, 4, 30)).astype(float) + 50
    base = holt_fit(y)
    shifted = holt_fit(y + c)
    assert (base.alpha, base.beta) == (shifted.alpha, shifted.beta)
    assert np.allclose(shifted.forecast(8), base.forecast(8) + c, rtol=0, atol=1e-9 * (1 + abs(c)))


@given(st.floats(-1e4, 1e4), st.integers(0, 2**31))
def test_translation_covariance_real_shift(c, seed):
    y = 10 + np.cumsum(np.random.default_rng(seed).normal(0.3, 1, 30))
    base, shifted = holt_fit(y), holt_fit(y + c)
    assert np.allclose(shifted.forecast(8), base.forecast(8) + c, rtol=0, atol=1e-4 * (1 + abs(c)))


def test_prefix_property():
    f = holt_fit(np.arange(20.0) + np.sin(np.arange(20.0)))
    assert np.array_equal(f.forecast(4), f.forecast(30)[:4])
    with pytest.raises(ValueError):
        f.forecast(0)
