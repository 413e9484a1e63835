"""Grid search on the validation segment shared by the ML forecasters."""

from __future__ import annotations

import itertools
import logging

import numpy as np

from ..timeseries import make_lagged, normalize
from .base import ForecasterError, as_series, rmse

log = logging.getLogger(__name__)


def expand_grid(grid: dict, keys) -> list[dict]:
    """Cartesian product in ``keys`` order; the first key varies slowest."""
    missing = [k for k in keys if k not in grid]
    if missing:
        raise ValueError(f"grid lacks {missing}")
    return [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]


def lagged_training_data(history, lag):
    """Normalise ``history`` and cut it into (window, next value) rows."""
    scaled, norm = normalize(history)
    data = make_lagged(scaled, lag)
    return data.windows, data.targets, norm, scaled[-lag:].copy()


def recursive(predict_one, window, h) -> np.ndarray:
    """Roll a one-step predictor forward, feeding predictions back in."""
    buf = np.concatenate((np.asarray(window, dtype=np.float64), np.empty(h)))
    lag = len(window)
    for k in range(h):
        buf[lag + k] = predict_one(buf[k : k + lag])
    return buf[lag:]


def select(candidates, fit_candidate, train, validation, refit_history=None):
    """Fit every candidate on ``train``, score recursive forecasts on ``validation``.

    The lowest validation RMSE wins; ties go to the earlier candidate. The
    winner is refit on ``refit_history`` (defaults to ``train``). Returns
    ``(fitted, scores)`` where scores lists (params, rmse or None).
    """
    train = as_series(train, "train")
    validation = as_series(validation, "validation")
    if validation.size == 0:
        raise ForecasterError("grid search needs a non-empty validation segment")
    scores = []
    best = None
    for params in candidates:
        try:
            fitted = fit_candidate(params, train)
            score = rmse(fitted.forecast(validation.size), validation)
        except (ForecasterError, ValueError) as exc:
            log.debug("candidate %s failed: %s", params, exc)
            scores.append((params, None))
            continue
        if not np.isfinite(score):
            scores.append((params, None))
            continue
        scores.append((params, score))
        if best is None or score < best[1]:
            best = (params, score, fitted)
    if best is None:
        raise ForecasterError("degenerate grid: every candidate failed")
    params, score, fitted = best
    if refit_history is not None:
        fitted = fit_candidate(params, as_series(refit_history, "history"))
    fitted.diagnostics["validation_rmse"] = score
    fitted.diagnostics["candidates"] = len(scores)
    return fitted, scores

