import numpy as np
import pytest

from modelgrowth.forecasters import ForecasterError, SvrParams, svr_fit
from modelgrowth.forecasters.svr import fit_svr_params, kernel_matrix, svr_candidates, svr_solve
from modelgrowth.kernels.smo import smo_jit, smo_numpy


def kkt_violation(K, z, C, eps, alpha, rho):
    """LIBSVM-style maximal violating pair gap, m(alpha) - M(alpha)."""
    l = z.size
    y = np.r_[np.ones(l), -np.ones(l)]
    p = np.r_[eps - z, eps + z]
    KK = np.block([[K, K], [K, K]])
    G = (y[:, None] * y[None, :] * KK) @ alpha + p
    up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
    low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
    return np.max(-y[up] * G[up]) - np.min(-y[low] * G[low])


def test_tiny_rbf_dual_satisfies_kkt():
    r = np.random.default_rng(0)
    X = r.normal(size=(6, 3))
    z = r.normal(size=6)
    params = SvrParams("rbf", 1.0, 0.5, 0.01, 3)
    m = svr_solve(X, z, params)
    C, eps = params.C, params.epsilon
    a, a_star = m.dual[:6], m.dual[6:]
    assert np.all(m.dual >= 0) and np.all(m.dual <= C + 1e-12)
    assert np.all(np.minimum(a, a_star) <= 1e-12)
    K = kernel_matrix(X, X, "rbf", 0.5)
    assert kkt_violation(K, z, C, eps, m.dual, -m.intercept) <= 1e-3 + 1e-12
    resid = z - m.predict(X)
    free = (m.dual[:6] > 1e-8) & (m.dual[:6] < C - 1e-8)
    assert np.all(np.abs(resid[free] - eps) <= 1e-3)
    free_star = (a_star > 1e-8) & (a_star < C - 1e-8)
    assert np.all(np.abs(resid[free_star] + eps) <= 1e-3)
    inside = np.abs(resid) < eps - 1e-3
    assert np.all(a[inside] < 1e-8) and np.all(a_star[inside] < 1e-8)


def test_smo_backends_agree():
    r = np.random.default_rng(1)
    for kernel in ("linear", "rbf"):
        X = r.normal(size=(25, 4))
        z = r.normal(size=25)
        K = np.ascontiguousarray(kernel_matrix(X, X, kernel, 0.3))
        a1, rho1, it1 = smo_jit(K, z, 10.0, 0.01, 1e-3, 100000)
        a2, rho2, it2 = smo_numpy(K, z, 10.0, 0.01, 1e-3, 100000)
        assert it1 == it2
        assert np.allclose(a1, a2, atol=1e-12) and abs(rho1 - rho2) < 1e-12


def test_linear_kernel_on_line():
    y = 3.0 + 0.5 * np.arange(60)
    f = fit_svr_params(y, SvrParams("linear", 100.0, 0.1, 0.001, 3))
    X = np.column_stack([y[i : i + 50] for i in range(3)])
    X = (X - y.min()) / (y.max() - y.min())
    pred = f.model.predict(X) * (y.max() - y.min()) + y.min()
    assert np.all(np.abs(pred - y[3:53]) <= 0.02 * np.abs(y[3:53]))


def test_constant_series_predicts_constant():
    y = np.full(40, 7.0)
    f = svr_fit(y[:30], y[30:], grid={"C": [1.0], "lag": [3], "epsilon": [0.01], "kernel": ["rbf"]})
    fc = f.forecast(5)
    assert np.allclose(fc, 7.0, atol=0.01 * 7.0)


def test_grid_collapses_gamma_for_linear():
    cands = svr_candidates()
    lin = [c for c in cands if c.kernel == "linear"]
    rbf = [c for c in cands if c.kernel == "rbf"]
    assert len(lin) == 4 * 2 * 3 and len(rbf) == 4 * 3 * 2 * 3
    assert len(set(cands)) == len(cands)


def test_validation_selection_and_prefix(trend_series):
    tr, va = trend_series[:80], trend_series[80:100]
    grid = {"kernel": ["linear"], "C": [1.0, 10.0], "epsilon": [0.01], "lag": [3, 5]}
    f = svr_fit(tr, va, grid)
    assert f.diagnostics["candidates"] == 4
    assert np.isfinite(f.diagnostics["validation_rmse"])
    assert np.array_equal(f.forecast(4), f.forecast(30)[:4])
    g = svr_fit(tr, va, grid)
    assert np.array_equal(f.forecast(30), g.forecast(30))


def test_degenerate_grid_errors():
    with pytest.raises(ForecasterError):
        svr_fit(np.arange(5.0), np.arange(5.0, 8.0), {"lag": [10]})


def test_params_validation():
    with pytest.raises(ValueError):
        SvrParams("poly", 1.0, 0.1, 0.01, 3)
    with pytest.raises(ValueError):
        SvrParams("rbf", 0.0, 0.1, 0.01, 3)
