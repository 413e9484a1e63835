"""Holt linear-trend recursion evaluated over a grid of smoothing constants."""

from __future__ import annotations

import numpy as np

from ..accel import njit, pick


def _holt_grid_loops(y, alphas, betas):
    n = y.shape[0]
    na = alphas.shape[0]
    nb = betas.shape[0]
    sse = np.empty((na, nb))
    level_out = np.empty((na, nb))
    trend_out = np.empty((na, nb))
    for i in range(na):
        a = alphas[i]
        for j in range(nb):
            b = betas[j]
            level = y[0]
            trend = y[1] - y[0]
            acc = 0.0
            for t in range(1, n):
                pred = level + trend
                err = y[t] - pred
                acc += err * err
                new_level = a * y[t] + (1.0 - a) * pred
                trend = b * (new_level - level) + (1.0 - b) * trend
                level = new_level
            sse[i, j] = acc
            level_out[i, j] = level
            trend_out[i, j] = trend
    return sse, level_out, trend_out


holt_grid_jit = njit(_holt_grid_loops)


def holt_grid_numpy(y, alphas, betas):
    a = np.asarray(alphas, dtype=np.float64)[:, None]
    b = np.asarray(betas, dtype=np.float64)[None, :]
    shape = (a.shape[0], b.shape[1])
    level = np.full(shape, y[0])
    trend = np.full(shape, y[1] - y[0])
    sse = np.zeros(shape)
    for t in range(1, y.shape[0]):
        pred = level + trend
        err = y[t] - pred
        sse += err * err
        new_level = a * y[t] + (1.0 - a) * pred
        trend = b * (new_level - level) + (1.0 - b) * trend
        level = new_level
    return sse, level, trend


holt_grid = pick(holt_grid_jit, holt_grid_numpy)
