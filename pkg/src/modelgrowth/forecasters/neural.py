"""Feed-forward (ANN) and LSTM forecasters averaged over several seeded runs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..kernels import nn
from ..seeding import stable_seed
from ..timeseries import denormalize
from .base import FittedForecaster, ForecasterError, Kind
from .search import expand_grid, lagged_training_data, recursive, select

BATCH_SIZE = 16
OPTIMIZERS = {"sgd": nn.SGD, "adam": nn.ADAM}
DEFAULT_LR = {"sgd": 0.1, "adam": 0.01}

ANN_DEFAULT_GRID = {"lag": [3, 5, 10], "hidden": [2, 4, 8], "learning_rate": [0.1], "epochs": [300]}
ANN_KEYS = ("lag", "hidden", "learning_rate", "epochs")
# "default" (or None) picks the optimizer's own step size.
LSTM_DEFAULT_GRID = {"lag": [3, 5, 10], "hidden": [4, 8], "epochs": [50, 200],
                     "optimizer": ["sgd", "adam"], "learning_rate": ["default"]}
LSTM_KEYS = ("lag", "hidden", "epochs", "optimizer", "learning_rate")


class TrainingDivergedError(ForecasterError):
    pass


@dataclass(frozen=True)
class AnnParams:
    lag: int
    hidden: int
    learning_rate: float = 0.1
    epochs: int = 300
    batch_size: int = BATCH_SIZE

    def __post_init__(self):
        if self.lag < 1 or self.hidden < 1 or self.learning_rate <= 0 or self.epochs < 0:
            raise ValueError(f"invalid ANN parameters: {self}")


@dataclass(frozen=True)
class LstmParams:
    lag: int
    hidden: int
    epochs: int
    optimizer: str = "adam"
    learning_rate: float | None = None
    batch_size: int = BATCH_SIZE

    def __post_init__(self):
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.learning_rate is None:
            object.__setattr__(self, "learning_rate", DEFAULT_LR[self.optimizer])
        if self.lag < 1 or self.hidden < 1 or self.learning_rate <= 0 or self.epochs < 0:
            raise ValueError(f"invalid LSTM parameters: {self}")


def init_ann(lag, hidden, rng) -> np.ndarray:
    theta = np.zeros(nn.ann_size(lag, hidden))
    theta[: lag * hidden] = rng.uniform(-1.0, 1.0, lag * hidden) / np.sqrt(lag)
    o = lag * hidden + hidden
    theta[o : o + hidden] = rng.uniform(-1.0, 1.0, hidden) / np.sqrt(hidden)
    return theta


def init_lstm(hidden, rng) -> np.ndarray:
    H = hidden
    bound = 1.0 / np.sqrt(H)
    theta = rng.uniform(-bound, bound, nn.lstm_size(H))
    o_b = 4 * H + 4 * H * H
    theta[o_b : o_b + 4 * H] = 0.0
    theta[o_b + H : o_b + 2 * H] = 1.0  # forget-gate bias
    theta[-1] = 0.0
    return theta


def _train(kind, X, y, params, seed):
    """Train one network; on NaN loss retry once at half the learning rate."""
    lr = float(params.learning_rate)
    for attempt in range(2):
        rng = np.random.default_rng(seed)
        n = X.shape[0]
        if kind is Kind.ANN:
            theta = init_ann(params.lag, params.hidden, rng)
            opt = nn.SGD
            train = nn.ann_train
        else:
            theta = init_lstm(params.hidden, rng)
            opt = OPTIMIZERS[params.optimizer]
            train = nn.lstm_train
        perms = np.empty((params.epochs, n), dtype=np.int64)
        for e in range(params.epochs):
            perms[e] = rng.permutation(n)
        hist = train(theta, X, y, params.hidden, lr, perms, params.batch_size, opt)
        if np.all(np.isfinite(hist)) and np.all(np.isfinite(theta)):
            return theta, hist, lr
        lr /= 2.0
    raise TrainingDivergedError(f"{kind.value} training diverged for {params} (seed {seed})")


class NetworkEnsemble(FittedForecaster):
    """Average of several independently initialised networks' forecasts."""

    def __init__(self, kind, params, thetas, histories, norm, window):
        self.kind = kind
        self.net_params = params
        self.thetas = thetas
        self.norm = norm
        self.window = window
        self.params = {k: v for k, v in params.__dict__.items()}
        self.params["runs"] = len(thetas)
        self.diagnostics = {"sse": float(np.mean([h[-1] for h in histories])),
                            "loss_curves": [h.tolist() for h in histories]}

    def _predict_one(self, theta, window):
        x = window[None, :]
        if self.kind is Kind.ANN:
            return float(nn.ann_predict_numpy(theta, x, self.net_params.hidden)[0])
        return float(nn.lstm_predict_numpy(theta, x, self.net_params.hidden)[0])

    def member_forecasts_normalized(self, h) -> np.ndarray:
        return np.array([recursive(lambda w, th=th: self._predict_one(th, w), self.window, h)
                         for th in self.thetas])

    def forecast_normalized(self, h):
        return self.member_forecasts_normalized(h).mean(axis=0)

    def _forecast(self, h):
        return denormalize(self.forecast_normalized(h), self.norm)

    def summary(self):
        out = super().summary()
        out["diagnostics"].pop("loss_curves", None)
        return out


def fit_network(kind, history, params, runs=5, seed=0) -> NetworkEnsemble:
    kind = Kind(kind)
    history = np.asarray(history, dtype=np.float64)
    if history.size <= params.lag:
        raise ForecasterError(f"history of length {history.size} too short for lag {params.lag}")
    X, y, norm, window = lagged_training_data(history, params.lag)
    thetas, hists = [], []
    for r in range(runs):
        theta, hist, _ = _train(kind, X, y, params, stable_seed(seed, "run", r))
        thetas.append(theta)
        hists.append(hist)
    return NetworkEnsemble(kind, params, thetas, hists, norm, window)


def ann_candidates(grid=None):
    grid = {**ANN_DEFAULT_GRID, **(grid or {})}
    return [AnnParams(int(c["lag"]), int(c["hidden"]), float(c["learning_rate"]), int(c["epochs"]))
            for c in expand_grid(grid, ANN_KEYS)]


def lstm_candidates(grid=None):
    grid = {**LSTM_DEFAULT_GRID, **(grid or {})}
    return [LstmParams(int(c["lag"]), int(c["hidden"]), int(c["epochs"]), str(c["optimizer"]),
                       None if c["learning_rate"] in (None, "default") else float(c["learning_rate"]))
            for c in expand_grid(grid, LSTM_KEYS)]


def ann_fit(train, validation, grid=None, runs=5, seed=0, refit_history=None) -> NetworkEnsemble:
    """Select (lag, hidden, ...) on validation RMSE of the run-averaged forecast."""
    fitted, _ = select(ann_candidates(grid),
                       lambda p, hist: fit_network(Kind.ANN, hist, p, runs, seed),
                       train, validation, refit_history)
    return fitted


def lstm_fit(train, validation, grid=None, runs=5, seed=0, refit_history=None) -> NetworkEnsemble:
    """Grid search over every combination of the LSTM parameter lists."""
    fitted, _ = select(lstm_candidates(grid),
                       lambda p, hist: fit_network(Kind.LSTM, hist, p, runs, seed),
                       train, validation, refit_history)
    return fitted
