"""The five forecasting approaches behind one fit/forecast contract."""

from __future__ import annotations

import numpy as np

from .arima import ArimaForecaster, ArimaOrder, arima_fit, auto_arima
from .base import FittedForecaster, ForecasterError, ForecasterSpec, Kind, forecast
from .holt import HoltForecaster, holt_fit
from .neural import AnnParams, LstmParams, NetworkEnsemble, ann_fit, lstm_fit
from .svr import SvrForecaster, SvrParams, svr_fit

__all__ = [
    "AnnParams", "ArimaForecaster", "ArimaOrder", "FittedForecaster", "ForecasterError",
    "ForecasterSpec", "HoltForecaster", "Kind", "LstmParams", "NetworkEnsemble",
    "SvrForecaster", "SvrParams", "ann_fit", "arima_fit", "auto_arima", "fit_forecaster",
    "forecast", "holt_fit", "lstm_fit", "svr_fit",
]


def fit_forecaster(spec: ForecasterSpec, train, validation=None, refit_history=None) -> FittedForecaster:
    """Fit ``spec`` and return the model used for the final forecasts.

    HOLT and ARIMA estimate everything in-sample, so they are fit directly on
    ``refit_history`` (or ``train``). The grid-searched approaches select on
    ``validation`` and then refit the winner on ``refit_history``.
    """
    kind = Kind(spec.kind)
    if kind is Kind.HOLT:
        return holt_fit(train if refit_history is None else refit_history)
    if kind is Kind.ARIMA:
        return auto_arima(train if refit_history is None else refit_history)
    if validation is None or np.size(validation) == 0:
        raise ForecasterError(f"{kind.value} needs a validation segment for its grid search")
    grid = spec.hyperparams or None
    if kind is Kind.SVR:
        return svr_fit(train, validation, grid, refit_history)
    if kind is Kind.ANN:
        return ann_fit(train, validation, grid, spec.runs, spec.seed, refit_history)
    return lstm_fit(train, validation, grid, spec.runs, spec.seed, refit_history)
