"""ARIMA(p, d, q) by conditional sum of squares, plus AIC order search."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..kernels.arima import ar_stable, css_nelder_mead, css_objective, css_residuals
from ..timeseries import difference, integrate_forecast
from .base import FittedForecaster, ForecasterError, Kind, as_series

log = logging.getLogger(__name__)

MAX_P, MAX_D, MAX_Q = 5, 2, 5
# AR and MA roots must clear the unit circle by this factor; near-unit MA
# roots let an over-differenced fit recover the level for free.
ROOT_RADIUS = 1.05
NM_XATOL = 1e-6
NM_FREL = 1e-10
NM_ITER_PER_PARAM = 300
NM_RESTARTS = 2


class UnstableFitError(ForecasterError):
    pass


class ConvergenceError(ForecasterError):
    pass


@dataclass(frozen=True)
class ArimaOrder:
    p: int
    d: int
    q: int

    def __post_init__(self):
        if not (0 <= self.p <= MAX_P and 0 <= self.d <= MAX_D and 0 <= self.q <= MAX_Q):
            raise ValueError(f"order out of range: {self}")

    @property
    def k(self) -> int:
        return self.p + self.q + 1


class ArimaForecaster(FittedForecaster):
    kind = Kind.ARIMA

    def __init__(self, order, intercept, c, phi, theta, history, sse, n_resid):
        self.order = order
        self.intercept = intercept
        self.c = float(c)
        self.phi = np.asarray(phi, dtype=np.float64)
        self.theta = np.asarray(theta, dtype=np.float64)
        self.history = history
        self.w = difference(history, order.d)[0]
        self.sse = float(sse)
        self.n_resid = int(n_resid)
        self.sigma2 = self.sse / self.n_resid
        self.aic = aic(self.sse, self.n_resid, order.k)
        self.params = {"p": order.p, "d": order.d, "q": order.q, "intercept": intercept,
                       "const": self.c, "ar": self.phi.tolist(), "ma": self.theta.tolist()}
        self.diagnostics = {"sse": self.sse, "sigma2": self.sigma2, "aic": self.aic,
                            "n": self.n_resid}

    def _forecast(self, h):
        p, q = self.order.p, self.order.q
        resid = css_residuals(self.w, self.c, self.phi, self.theta)
        w_ext = np.concatenate((self.w[self.w.size - p :] if p else [], np.zeros(h)))
        e_ext = np.concatenate((np.zeros(max(q - resid.size, 0)),
                                resid[resid.size - q :] if q else [], np.zeros(h)))
        for k in range(h):
            val = self.c
            for i in range(p):
                val += self.phi[i] * w_ext[p + k - 1 - i]
            for j in range(q):
                val += self.theta[j] * e_ext[q + k - 1 - j]
            w_ext[p + k] = val
        return integrate_forecast(w_ext[p:], self.history, self.order.d)


def aic(sse: float, n: int, k: int) -> float:
    if sse <= 0.0:
        return -np.inf
    return n * np.log(sse / n) + 2 * k


def _ols(wc, p, has_const, start):
    rows = np.arange(max(start, p), wc.size)
    cols = [np.ones(rows.size)] if has_const else []
    cols += [wc[rows - 1 - i] for i in range(p)]
    if not cols:
        return np.zeros(0)
    A = np.column_stack(cols)
    return np.linalg.lstsq(A, wc[rows], rcond=None)[0]


def _hannan_rissanen(wc, p, q, has_const):
    """Two-stage regression start values; zeros when unusable."""
    n = wc.size
    m = min(max(p + q + 2, 4), n // 3)
    x0 = np.zeros(int(has_const) + p + q)
    if m < 1 or n - m - q <= p + q + 2:
        return x0
    ar_long = _ols(wc, m, False, m)
    lag_mat = np.column_stack([wc[m - 1 - i : n - 1 - i] for i in range(m)])
    ehat = np.zeros(n)
    ehat[m:] = wc[m:] - lag_mat @ ar_long
    rows = np.arange(m + q, n)
    cols = [np.ones(rows.size)] if has_const else []
    cols += [wc[rows - 1 - i] for i in range(p)]
    cols += [ehat[rows - 1 - j] for j in range(q)]
    est = np.linalg.lstsq(np.column_stack(cols), wc[rows], rcond=None)[0]
    off = int(has_const)
    if ar_stable(est[off : off + p], ROOT_RADIUS) and ar_stable(-est[off + p :], ROOT_RADIUS):
        return est
    return x0


def arima_fit(train, order: ArimaOrder | tuple, intercept: bool = True,
              start: int | None = None) -> ArimaForecaster:
    """Fit one ARIMA order by conditional least squares.

    The series is differenced ``d`` times and centred; the constant is then
    estimated on the centred scale and mapped back, which keeps the fit
    exactly translation covariant. Pure AR orders are solved by linear
    least squares, others by Nelder-Mead from Hannan-Rissanen estimates.
    ``start`` restricts the summed residuals to ``t >= start`` on the
    differenced scale (used to score candidates on a common window).
    """
    if not isinstance(order, ArimaOrder):
        order = ArimaOrder(*order)
    y = as_series(train, "train")
    p, d, q = order.p, order.d, order.q
    if y.size <= p + q + d + 1:
        raise ForecasterError(f"series of length {y.size} too short for {order}")
    w, _ = difference(y, d)
    start = p if start is None else max(int(start), p)
    if w.size - start < 1:
        raise ForecasterError(f"no residuals left for {order} with start={start}")
    if intercept:
        # anchor on w[0] first: integer-valued input shifted by an integer
        # then yields bit-identical centred data, hence an identical fit
        anchor = float(w[0])
        wa = w - anchor
        offset = float(wa.mean())
        mean_w = anchor + offset
        wc = wa - offset
    else:
        mean_w = 0.0
        wc = w

    if q == 0:
        x = _ols(wc, p, intercept, start)
    else:
        x0 = _hannan_rissanen(wc, p, q, intercept)
        f0 = css_objective(x0, wc, p, q, intercept, start, ROOT_RADIUS)
        if not np.isfinite(f0):
            x0 = np.zeros_like(x0)
            f0 = css_objective(x0, wc, p, q, intercept, start, ROOT_RADIUS)
        dim = x0.size
        scale = float(np.std(wc)) or 1.0
        steps = np.full(dim, 0.1)
        if intercept:
            steps[0] = 0.1 * scale
        maxiter = NM_ITER_PER_PARAM * dim
        x, nit_total = x0, 0
        for attempt in range(1 + NM_RESTARTS):
            # fresh simplex around the best point so far; helps when the
            # optimum sits on the root-margin wall
            simplex = np.tile(x, (dim + 1, 1)) + np.vstack((np.zeros(dim), np.diag(steps)))
            x, _, nit, ok = css_nelder_mead(simplex, wc, p, q, intercept, start, ROOT_RADIUS,
                                            NM_XATOL, NM_FREL * max(f0, 1e-300), maxiter,
                                            2 * maxiter, dim > 3)
            nit_total += nit
            if ok:
                break
            steps = steps / 2.0
        else:
            raise ConvergenceError(f"{order}: Nelder-Mead stopped after {nit_total} iterations")

    off = int(intercept)
    c_centred = float(x[0]) if intercept else 0.0
    phi, theta = x[off : off + p], x[off + p : off + p + q]
    if not ar_stable(phi, ROOT_RADIUS):
        raise UnstableFitError(f"unstable fit: AR polynomial of {order} has a root inside |z| = {ROOT_RADIUS}")
    if not ar_stable(-theta, ROOT_RADIUS):
        raise UnstableFitError(f"unstable fit: MA polynomial of {order} has a root inside |z| = {ROOT_RADIUS}")
    sse = css_objective(x, wc, p, q, intercept, start, ROOT_RADIUS)
    c = c_centred + mean_w * (1.0 - float(np.sum(phi)))
    return ArimaForecaster(order, intercept, c, phi, theta, y, sse, w.size - start)


def candidate_orders(n: int):
    """All orders within the search box that the data length supports."""
    out = []
    for d in range(MAX_D + 1):
        for p in range(MAX_P + 1):
            for q in range(MAX_Q + 1):
                if n > p + q + d + 1:
                    out.append(ArimaOrder(p, d, q))
    return out


def auto_arima(train) -> ArimaForecaster:
    """Pick (p, d, q) by minimum AIC, ties to smaller p+q, then smaller d.

    Every candidate is scored over the same observations (the first
    ``max(p + d)`` values are conditioned on) so AIC values are comparable.
    A constant is included for d <= 1.
    """
    y = as_series(train, "train")
    if y.size < 10:
        raise ForecasterError("auto_arima needs at least 10 observations")
    orders = candidate_orders(y.size)
    t0 = max(o.p + o.d for o in orders)
    scored = []
    for order in orders:
        n_common = y.size - t0
        if n_common <= order.k + 1:
            continue
        try:
            fit = arima_fit(y, order, intercept=order.d < 2, start=t0 - order.d)
        except ForecasterError as exc:
            log.debug("skipping %s: %s", order, exc)
            continue
        scored.append((fit.aic, order.p + order.q, order.d, order.p, order, fit))
    if not scored:
        log.warning("auto_arima: every candidate failed, falling back to ARIMA(0,1,0)")
        best = ArimaOrder(0, 1, 0)
        n_tried = 0
    else:
        best_aic = min(s[0] for s in scored)
        tol = 1e-9 * max(1.0, abs(best_aic))
        ties = [s for s in scored if s[0] <= best_aic + tol]
        chosen = min(ties, key=lambda s: (s[1], s[2], s[3]))
        best = chosen[4]
        n_tried = len(scored)
    try:
        fit = arima_fit(y, best, intercept=best.d < 2)
    except ForecasterError:
        if not scored:
            raise
        log.warning("auto_arima: refit of %s on the full sample failed, keeping the selection fit", best)
        fit = chosen[5]
    fit.diagnostics["candidates"] = n_tried
    return fit
