"""Epsilon-insensitive support vector regression on lagged windows."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..kernels.smo import smo
from ..timeseries import denormalize
from .base import FittedForecaster, ForecasterError, Kind
from .search import expand_grid, lagged_training_data, recursive, select

KERNELS = ("linear", "rbf")
DEFAULT_GRID = {
    "kernel": ["linear", "rbf"],
    "C": [0.1, 1.0, 10.0, 100.0],
    "gamma": [0.01, 0.1, 1.0],
    "epsilon": [0.001, 0.01],
    "lag": [3, 5, 10],
}
GRID_KEYS = ("kernel", "C", "gamma", "epsilon", "lag")
KKT_TOL = 1e-3
MAX_ITER = 1_000_000


@dataclass(frozen=True)
class SvrParams:
    kernel: str
    C: float
    gamma: float
    epsilon: float
    lag: int

    def __post_init__(self):
        if self.kernel not in KERNELS:
            raise ValueError(f"unknown kernel {self.kernel!r}")
        if min(self.C, self.gamma, self.epsilon) <= 0 or self.lag < 1:
            raise ValueError(f"SVR parameters must be positive: {self}")


def kernel_matrix(A, B, kernel, gamma):
    A = np.atleast_2d(A)
    B = np.atleast_2d(B)
    if kernel == "linear":
        return A @ B.T
    d2 = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * (A @ B.T)
    return np.exp(-gamma * np.maximum(d2, 0.0))


@dataclass
class SvrModel:
    X: np.ndarray
    coef: np.ndarray
    intercept: float
    dual: np.ndarray
    kernel: str
    gamma: float
    iterations: int

    def predict(self, X):
        return kernel_matrix(X, self.X, self.kernel, self.gamma) @ self.coef + self.intercept


def svr_solve(X, z, params: SvrParams, tol=KKT_TOL, max_iter=MAX_ITER) -> SvrModel:
    """Solve the dual by SMO; ``coef = alpha - alpha*`` and ``intercept = -rho``."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    z = np.ascontiguousarray(z, dtype=np.float64)
    K = np.ascontiguousarray(kernel_matrix(X, X, params.kernel, params.gamma))
    alpha, rho, it = smo(K, z, float(params.C), float(params.epsilon), float(tol), int(max_iter))
    l = X.shape[0]
    return SvrModel(X, alpha[:l] - alpha[l:], -float(rho), alpha, params.kernel,
                    float(params.gamma), int(it))


class SvrForecaster(FittedForecaster):
    kind = Kind.SVR

    def __init__(self, params: SvrParams, model: SvrModel, norm, window):
        self.svr_params = params
        self.model = model
        self.norm = norm
        self.window = window
        self.params = dict(params.__dict__)
        self.diagnostics = {"iterations": model.iterations,
                            "support_vectors": int(np.count_nonzero(model.coef))}

    def forecast_normalized(self, h):
        return recursive(lambda w: float(self.model.predict(w[None, :])[0]), self.window, h)

    def _forecast(self, h):
        return denormalize(self.forecast_normalized(h), self.norm)


def fit_svr_params(history, params: SvrParams) -> SvrForecaster:
    history = np.asarray(history, dtype=np.float64)
    if history.size <= params.lag:
        raise ForecasterError(f"history of length {history.size} too short for lag {params.lag}")
    X, y, norm, window = lagged_training_data(history, params.lag)
    model = svr_solve(X, y, params)
    f = SvrForecaster(params, model, norm, window)
    resid = model.predict(X) - y
    f.diagnostics["sse"] = float(resid @ resid)
    return f


def svr_candidates(grid=None) -> list[SvrParams]:
    grid = {**DEFAULT_GRID, **(grid or {})}
    out = []
    seen = set()
    for combo in expand_grid(grid, GRID_KEYS):
        if combo["kernel"] == "linear":
            combo["gamma"] = grid["gamma"][0]
        p = SvrParams(combo["kernel"], float(combo["C"]), float(combo["gamma"]),
                      float(combo["epsilon"]), int(combo["lag"]))
        if p not in seen:
            seen.add(p)
            out.append(p)
    return out


def svr_fit(train, validation, grid=None, refit_history=None) -> SvrForecaster:
    """Grid-search SVR hyperparameters on the validation segment.

    The linear kernel ignores gamma, so its gamma axis is collapsed.
    """
    fitted, _ = select(svr_candidates(grid), lambda p, hist: fit_svr_params(hist, p),
                       train, validation, refit_history)
    return fitted
