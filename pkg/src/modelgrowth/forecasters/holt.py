"""Holt's linear trend method with automatic smoothing constants."""

from __future__ import annotations

import numpy as np

from ..kernels.holt import holt_grid
from .base import FittedForecaster, ForecasterError, Kind, as_series

GRID = np.round(np.arange(0.05, 1.0, 0.05), 10)
BOUND = 1e-4
MIN_STEP = 1e-6


class HoltForecaster(FittedForecaster):
    kind = Kind.HOLT

    def __init__(self, alpha, beta, level, trend, sse):
        self.alpha = float(alpha)
        self.beta = float(beta)
        self.level = float(level)
        self.trend = float(trend)
        self.params = {"alpha": self.alpha, "beta": self.beta}
        self.diagnostics = {"sse": float(sse), "level": self.level, "trend": self.trend}

    def _forecast(self, h):
        return self.level + np.arange(1, h + 1) * self.trend


def holt_sse(train, alpha, beta) -> float:
    y = as_series(train)
    sse, _, _ = holt_grid(y, np.array([float(alpha)]), np.array([float(beta)]))
    return float(sse[0, 0])


def _refine(y, a, b, best, step):
    """Compass search on a 3x3 stencil, halving the step when stuck."""
    while step >= MIN_STEP:
        alphas = np.clip(np.array([a - step, a, a + step]), BOUND, 1.0 - BOUND)
        betas = np.clip(np.array([b - step, b, b + step]), BOUND, 1.0 - BOUND)
        sse, _, _ = holt_grid(y, alphas, betas)
        i, j = np.unravel_index(int(np.argmin(sse)), sse.shape)
        if sse[i, j] < best:
            a, b, best = alphas[i], betas[j], float(sse[i, j])
        else:
            step /= 2.0
    return a, b


def holt_fit(train, alpha=None, beta=None) -> HoltForecaster:
    """Fit Holt's method; alpha/beta minimise the one-step-ahead SSE.

    Initial state is ``level = y[0]``, ``trend = y[1] - y[0]``. Passing both
    constants skips the search. The recursion runs on ``y - y[0]`` so a
    shifted series sees the same numbers.
    """
    y = as_series(train, "train")
    if y.size < 3:
        raise ForecasterError("Holt needs at least 3 observations")
    shift = float(y[0])
    y = y - shift
    if alpha is None or beta is None:
        sse, _, _ = holt_grid(y, GRID, GRID)
        i, j = np.unravel_index(int(np.argmin(sse)), sse.shape)
        alpha, beta = _refine(y, GRID[i], GRID[j], float(sse[i, j]), 0.025)
    sse, level, trend = holt_grid(y, np.array([float(alpha)]), np.array([float(beta)]))
    return HoltForecaster(alpha, beta, level[0, 0] + shift, trend[0, 0], sse[0, 0])
