"""Training kernels for the two neural forecasters.

Parameters live in one flat float64 vector so a single optimizer routine
serves both networks.

Feed-forward layout (``lag`` inputs, ``H`` sigmoid hidden units, linear out)::

    W1 (lag, H) | b1 (H) | w2 (H) | b2 (1)

LSTM layout (scalar input per step, ``H`` units, gate order i, f, g, o)::

    Wx (4H) | Wh (4H, H) | b (4H) | wo (H) | bo (1)

The loss of a batch of ``m`` rows is ``0.5 * mean((yhat - y) ** 2)``.
Shuffling is supplied from outside as ``perms`` (one permutation per epoch)
so both backends consume identical batches.
"""

from __future__ import annotations

import numpy as np

from ..accel import njit, pick

SGD = 0
ADAM = 1
ADAM_B1 = 0.9
ADAM_B2 = 0.999
ADAM_EPS = 1e-8


def ann_size(lag: int, hidden: int) -> int:
    return lag * hidden + 2 * hidden + 1


def lstm_size(hidden: int) -> int:
    return 4 * hidden * hidden + 9 * hidden + 1


# ---------------------------------------------------------------- shared

def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


_sigmoid_jit = njit(_sigmoid)


def _apply_update_impl(theta, grad, m, v, step, lr, opt):
    if opt == ADAM:
        b1c = 1.0 - ADAM_B1 ** step
        b2c = 1.0 - ADAM_B2 ** step
        for k in range(theta.shape[0]):
            m[k] = ADAM_B1 * m[k] + (1.0 - ADAM_B1) * grad[k]
            v[k] = ADAM_B2 * v[k] + (1.0 - ADAM_B2) * grad[k] * grad[k]
            theta[k] -= lr * (m[k] / b1c) / (np.sqrt(v[k] / b2c) + ADAM_EPS)
    else:
        for k in range(theta.shape[0]):
            theta[k] -= lr * grad[k]


_apply_update_jit = njit(_apply_update_impl)


def _apply_update_numpy(theta, grad, m, v, step, lr, opt):
    if opt == ADAM:
        m *= ADAM_B1
        m += (1.0 - ADAM_B1) * grad
        v *= ADAM_B2
        v += (1.0 - ADAM_B2) * grad * grad
        b1c = 1.0 - ADAM_B1 ** step
        b2c = 1.0 - ADAM_B2 ** step
        theta -= lr * (m / b1c) / (np.sqrt(v / b2c) + ADAM_EPS)
    else:
        theta -= lr * grad


# ---------------------------------------------------------------- feed-forward

def _ann_loss_grad_loops(theta, X, y, hidden):
    m, lag = X.shape
    H = hidden
    o_b1 = lag * H
    o_w2 = o_b1 + H
    o_b2 = o_w2 + H
    grad = np.zeros(theta.shape[0])
    s = np.empty(H)
    loss = 0.0
    for r in range(m):
        out = theta[o_b2]
        for k in range(H):
            a = theta[o_b1 + k]
            for u in range(lag):
                a += X[r, u] * theta[u * H + k]
            s[k] = _sigmoid_jit(a)
            out += s[k] * theta[o_w2 + k]
        err = out - y[r]
        loss += 0.5 * err * err / m
        d = err / m
        grad[o_b2] += d
        for k in range(H):
            grad[o_w2 + k] += d * s[k]
            da = d * theta[o_w2 + k] * s[k] * (1.0 - s[k])
            grad[o_b1 + k] += da
            for u in range(lag):
                grad[u * H + k] += da * X[r, u]
    return loss, grad


ann_loss_grad_jit = njit(_ann_loss_grad_loops)


def ann_unpack(theta, lag, hidden):
    H = hidden
    W1 = theta[: lag * H].reshape(lag, H)
    b1 = theta[lag * H : lag * H + H]
    w2 = theta[lag * H + H : lag * H + 2 * H]
    b2 = theta[lag * H + 2 * H]
    return W1, b1, w2, b2


def ann_predict_numpy(theta, X, hidden):
    W1, b1, w2, b2 = ann_unpack(theta, X.shape[1], hidden)
    return _sigmoid(X @ W1 + b1) @ w2 + b2


def ann_loss_grad_numpy(theta, X, y, hidden):
    m, lag = X.shape
    W1, b1, w2, b2 = ann_unpack(theta, lag, hidden)
    s = _sigmoid(X @ W1 + b1)
    err = s @ w2 + b2 - y
    loss = 0.5 * float(err @ err) / m
    d = err / m
    da = np.outer(d, w2) * s * (1.0 - s)
    grad = np.concatenate(((X.T @ da).ravel(), da.sum(axis=0), s.T @ d, [d.sum()]))
    return loss, grad


def _ann_train_loops(theta, X, y, hidden, lr, perms, batch_size, opt):
    n = X.shape[0]
    epochs = perms.shape[0]
    hist = np.empty(epochs + 1)
    loss, _ = ann_loss_grad_jit(theta, X, y, hidden)
    hist[0] = 2.0 * n * loss
    mom = np.zeros(theta.shape[0])
    vel = np.zeros(theta.shape[0])
    step = 0
    for e in range(epochs):
        for start in range(0, n, batch_size):
            stop = min(start + batch_size, n)
            rows = perms[e, start:stop]
            Xb = np.empty((stop - start, X.shape[1]))
            yb = np.empty(stop - start)
            for r in range(stop - start):
                Xb[r, :] = X[rows[r], :]
                yb[r] = y[rows[r]]
            _, g = ann_loss_grad_jit(theta, Xb, yb, hidden)
            step += 1
            _apply_update_jit(theta, g, mom, vel, step, lr, opt)
        loss, _ = ann_loss_grad_jit(theta, X, y, hidden)
        hist[e + 1] = 2.0 * n * loss
        if not np.isfinite(loss):
            hist[e + 1 :] = np.nan
            break
    return hist


ann_train_jit = njit(_ann_train_loops)


def ann_train_numpy(theta, X, y, hidden, lr, perms, batch_size, opt):
    n = X.shape[0]
    epochs = perms.shape[0]
    hist = np.empty(epochs + 1)
    hist[0] = 2.0 * n * ann_loss_grad_numpy(theta, X, y, hidden)[0]
    mom = np.zeros_like(theta)
    vel = np.zeros_like(theta)
    step = 0
    with np.errstate(over="ignore", invalid="ignore"):
        for e in range(epochs):
            for start in range(0, n, batch_size):
                rows = perms[e, start : start + batch_size]
                _, g = ann_loss_grad_numpy(theta, X[rows], y[rows], hidden)
                step += 1
                _apply_update_numpy(theta, g, mom, vel, step, lr, opt)
            loss = ann_loss_grad_numpy(theta, X, y, hidden)[0]
            hist[e + 1] = 2.0 * n * loss
            if not np.isfinite(loss):
                hist[e + 1 :] = np.nan
                break
    return hist


ann_loss_grad = pick(ann_loss_grad_jit, ann_loss_grad_numpy)
ann_train = pick(ann_train_jit, ann_train_numpy)


# ---------------------------------------------------------------- LSTM

def _lstm_forward_loops(theta, x, hidden, hs, cs, gates):
    """Run one window; fills hs/cs (T+1, H) and gates (T, 4H) activations."""
    H = hidden
    T = x.shape[0]
    o_wh = 4 * H
    o_b = o_wh + 4 * H * H
    for k in range(H):
        hs[0, k] = 0.0
        cs[0, k] = 0.0
    for t in range(T):
        for r in range(4 * H):
            z = theta[r] * x[t] + theta[o_b + r]
            for k in range(H):
                z += theta[o_wh + r * H + k] * hs[t, k]
            if 2 * H <= r < 3 * H:
                gates[t, r] = np.tanh(z)
            else:
                gates[t, r] = _sigmoid_jit(z)
        for k in range(H):
            c = gates[t, H + k] * cs[t, k] + gates[t, k] * gates[t, 2 * H + k]
            cs[t + 1, k] = c
            hs[t + 1, k] = gates[t, 3 * H + k] * np.tanh(c)


_lstm_forward_jit = njit(_lstm_forward_loops)


def _lstm_loss_grad_loops(theta, X, y, hidden):
    m, T = X.shape
    H = hidden
    o_wh = 4 * H
    o_b = o_wh + 4 * H * H
    o_wo = o_b + 4 * H
    o_bo = o_wo + H
    grad = np.zeros(theta.shape[0])
    hs = np.empty((T + 1, H))
    cs = np.empty((T + 1, H))
    gates = np.empty((T, 4 * H))
    dz = np.empty(4 * H)
    dh = np.empty(H)
    dc = np.empty(H)
    loss = 0.0
    for r in range(m):
        _lstm_forward_jit(theta, X[r], H, hs, cs, gates)
        out = theta[o_bo]
        for k in range(H):
            out += theta[o_wo + k] * hs[T, k]
        err = out - y[r]
        loss += 0.5 * err * err / m
        d = err / m
        grad[o_bo] += d
        for k in range(H):
            grad[o_wo + k] += d * hs[T, k]
            dh[k] = d * theta[o_wo + k]
            dc[k] = 0.0
        for t in range(T - 1, -1, -1):
            for k in range(H):
                gi = gates[t, k]
                gf = gates[t, H + k]
                gg = gates[t, 2 * H + k]
                go = gates[t, 3 * H + k]
                tc = np.tanh(cs[t + 1, k])
                dck = dc[k] + dh[k] * go * (1.0 - tc * tc)
                dz[k] = dck * gg * gi * (1.0 - gi)
                dz[H + k] = dck * cs[t, k] * gf * (1.0 - gf)
                dz[2 * H + k] = dck * gi * (1.0 - gg * gg)
                dz[3 * H + k] = dh[k] * tc * go * (1.0 - go)
                dc[k] = dck * gf
            for k in range(H):
                dh[k] = 0.0
            for q in range(4 * H):
                grad[q] += dz[q] * X[r, t]
                grad[o_b + q] += dz[q]
                for k in range(H):
                    grad[o_wh + q * H + k] += dz[q] * hs[t, k]
                    dh[k] += theta[o_wh + q * H + k] * dz[q]
    return loss, grad


lstm_loss_grad_jit = njit(_lstm_loss_grad_loops)


def lstm_unpack(theta, hidden):
    H = hidden
    Wx = theta[: 4 * H]
    Wh = theta[4 * H : 4 * H + 4 * H * H].reshape(4 * H, H)
    b = theta[4 * H + 4 * H * H : 8 * H + 4 * H * H]
    wo = theta[8 * H + 4 * H * H : 9 * H + 4 * H * H]
    bo = theta[9 * H + 4 * H * H]
    return Wx, Wh, b, wo, bo


def lstm_forward_numpy(theta, X, hidden):
    """Batched forward pass; returns predictions and the per-step caches."""
    Wx, Wh, b, wo, bo = lstm_unpack(theta, hidden)
    H = hidden
    m, T = X.shape
    h = np.zeros((m, H))
    c = np.zeros((m, H))
    hs, cs, acts = [h], [c], []
    for t in range(T):
        z = X[:, t, None] * Wx + h @ Wh.T + b
        a = np.empty_like(z)
        a[:, : 2 * H] = _sigmoid(z[:, : 2 * H])
        a[:, 2 * H : 3 * H] = np.tanh(z[:, 2 * H : 3 * H])
        a[:, 3 * H :] = _sigmoid(z[:, 3 * H :])
        c = a[:, H : 2 * H] * c + a[:, :H] * a[:, 2 * H : 3 * H]
        h = a[:, 3 * H :] * np.tanh(c)
        hs.append(h)
        cs.append(c)
        acts.append(a)
    return h @ wo + bo, (hs, cs, acts)


def lstm_predict_numpy(theta, X, hidden):
    return lstm_forward_numpy(theta, X, hidden)[0]


def lstm_loss_grad_numpy(theta, X, y, hidden):
    H = hidden
    m, T = X.shape
    Wx, Wh, b, wo, bo = lstm_unpack(theta, H)
    out, (hs, cs, acts) = lstm_forward_numpy(theta, X, H)
    err = out - y
    loss = 0.5 * float(err @ err) / m
    d = err / m
    gWx = np.zeros(4 * H)
    gWh = np.zeros((4 * H, H))
    gb = np.zeros(4 * H)
    gwo = hs[T].T @ d
    dh = np.outer(d, wo)
    dc = np.zeros((m, H))
    for t in range(T - 1, -1, -1):
        a = acts[t]
        gi, gf, gg, go = a[:, :H], a[:, H : 2 * H], a[:, 2 * H : 3 * H], a[:, 3 * H :]
        tc = np.tanh(cs[t + 1])
        dck = dc + dh * go * (1.0 - tc * tc)
        dz = np.concatenate(
            (
                dck * gg * gi * (1.0 - gi),
                dck * cs[t] * gf * (1.0 - gf),
                dck * gi * (1.0 - gg * gg),
                dh * tc * go * (1.0 - go),
            ),
            axis=1,
        )
        dc = dck * gf
        gWx += dz.T @ X[:, t]
        gb += dz.sum(axis=0)
        gWh += dz.T @ hs[t]
        dh = dz @ Wh
    grad = np.concatenate((gWx, gWh.ravel(), gb, gwo, [d.sum()]))
    return loss, grad


def _lstm_train_loops(theta, X, y, hidden, lr, perms, batch_size, opt):
    n = X.shape[0]
    epochs = perms.shape[0]
    hist = np.empty(epochs + 1)
    loss, _ = lstm_loss_grad_jit(theta, X, y, hidden)
    hist[0] = 2.0 * n * loss
    mom = np.zeros(theta.shape[0])
    vel = np.zeros(theta.shape[0])
    step = 0
    for e in range(epochs):
        for start in range(0, n, batch_size):
            stop = min(start + batch_size, n)
            rows = perms[e, start:stop]
            Xb = np.empty((stop - start, X.shape[1]))
            yb = np.empty(stop - start)
            for r in range(stop - start):
                Xb[r, :] = X[rows[r], :]
                yb[r] = y[rows[r]]
            _, g = lstm_loss_grad_jit(theta, Xb, yb, hidden)
            step += 1
            _apply_update_jit(theta, g, mom, vel, step, lr, opt)
        loss, _ = lstm_loss_grad_jit(theta, X, y, hidden)
        hist[e + 1] = 2.0 * n * loss
        if not np.isfinite(loss):
            hist[e + 1 :] = np.nan
            break
    return hist


lstm_train_jit = njit(_lstm_train_loops)


def lstm_train_numpy(theta, X, y, hidden, lr, perms, batch_size, opt):
    n = X.shape[0]
    epochs = perms.shape[0]
    hist = np.empty(epochs + 1)
    hist[0] = 2.0 * n * lstm_loss_grad_numpy(theta, X, y, hidden)[0]
    mom = np.zeros_like(theta)
    vel = np.zeros_like(theta)
    step = 0
    with np.errstate(over="ignore", invalid="ignore"):
        for e in range(epochs):
            for start in range(0, n, batch_size):
                rows = perms[e, start : start + batch_size]
                _, g = lstm_loss_grad_numpy(theta, X[rows], y[rows], hidden)
                step += 1
                _apply_update_numpy(theta, g, mom, vel, step, lr, opt)
            loss = lstm_loss_grad_numpy(theta, X, y, hidden)[0]
            hist[e + 1] = 2.0 * n * loss
            if not np.isfinite(loss):
                hist[e + 1 :] = np.nan
                break
    return hist


lstm_loss_grad = pick(lstm_loss_grad_jit, lstm_loss_grad_numpy)
lstm_train = pick(lstm_train_jit, lstm_train_numpy)
