from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any

import numpy as np


class Kind(str, enum.Enum):
    HOLT = "HOLT"
    ARIMA = "ARIMA"
    SVR = "SVR"
    ANN = "ANN"
    LSTM = "LSTM"


class ForecasterError(RuntimeError):
    pass


@dataclass
class ForecasterSpec:
    """What to fit: the approach, its hyperparameter grid and seeding.

    ``hyperparams`` maps parameter names to candidate lists for the grid
    searched approaches (SVR, ANN, LSTM) and is empty for HOLT/ARIMA.
    """

    kind: Kind
    hyperparams: dict[str, list] = field(default_factory=dict)
    seed: int = 0
    runs: int = 5

    def __post_init__(self):
        self.kind = Kind(self.kind)
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        for name, values in self.hyperparams.items():
            if not isinstance(values, (list, tuple)) or not values:
                raise ValueError(f"grid for {name!r} must be a non-empty list")


class FittedForecaster:
    """A fitted model producing h-step forecasts in the original scale."""

    kind: Kind
    params: dict[str, Any]
    diagnostics: dict[str, Any]

    def forecast(self, h: int) -> np.ndarray:
        h = int(h)
        if h < 1:
            raise ValueError("forecast horizon must be >= 1")
        return self._forecast(h)

    def _forecast(self, h: int) -> np.ndarray:
        raise NotImplementedError

    def summary(self) -> dict[str, Any]:
        return {"kind": self.kind.value, "params": _jsonable(self.params),
                "diagnostics": _jsonable(self.diagnostics)}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, enum.Enum):
        return obj.value
    return obj


def forecast(f: FittedForecaster, h: int) -> np.ndarray:
    return f.forecast(h)


def as_series(values, name="series") -> np.ndarray:
    x = np.asarray(values, dtype=np.float64).ravel()
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains non-finite values")
    return x


def rmse(pred, truth) -> float:
    d = np.asarray(pred, dtype=np.float64) - np.asarray(truth, dtype=np.float64)
    return float(np.sqrt(np.mean(d * d)))
