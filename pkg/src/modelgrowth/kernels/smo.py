"""SMO solver for the epsilon-SVR dual.

The dual is written over ``2l`` variables the way LIBSVM does it::

    min 1/2 a'Qa + p'a   s.t.  y'a = 0,  0 <= a <= C
    y = [+1]*l + [-1]*l,  p = [eps - z, eps + z],  Q_ij = y_i y_j K[i % l, j % l]

Working-set selection uses second-order information (Fan, Chen & Lin).
Both versions pick the *last* index on ties so they follow the same path.
"""

from __future__ import annotations

import numpy as np

from ..accel import njit, pick

TAU = 1e-12


def _smo_loops(K, z, C, eps, tol, max_iter):
    l = K.shape[0]
    n = 2 * l
    alpha = np.zeros(n)
    y = np.empty(n)
    G = np.empty(n)
    for t in range(l):
        y[t] = 1.0
        y[t + l] = -1.0
        G[t] = eps - z[t]
        G[t + l] = eps + z[t]
    it = 0
    while it < max_iter:
        gmax = -np.inf
        i = -1
        for t in range(n):
            if y[t] > 0.0:
                if alpha[t] < C and -G[t] >= gmax:
                    gmax = -G[t]
                    i = t
            else:
                if alpha[t] > 0.0 and G[t] >= gmax:
                    gmax = G[t]
                    i = t
        if i == -1:
            break
        il = i % l
        gmax2 = -np.inf
        j = -1
        obj_min = np.inf
        for t in range(n):
            tl = t % l
            q_it = y[i] * y[t] * K[il, tl]
            if y[t] > 0.0:
                if alpha[t] > 0.0:
                    grad_diff = gmax + G[t]
                    if G[t] >= gmax2:
                        gmax2 = G[t]
                    if grad_diff > 0.0:
                        quad = K[il, il] + K[tl, tl] - 2.0 * y[i] * q_it
                        if quad <= 0.0:
                            quad = TAU
                        obj = -(grad_diff * grad_diff) / quad
                        if obj <= obj_min:
                            j = t
                            obj_min = obj
            else:
                if alpha[t] < C:
                    grad_diff = gmax - G[t]
                    if -G[t] >= gmax2:
                        gmax2 = -G[t]
                    if grad_diff > 0.0:
                        quad = K[il, il] + K[tl, tl] + 2.0 * y[i] * q_it
                        if quad <= 0.0:
                            quad = TAU
                        obj = -(grad_diff * grad_diff) / quad
                        if obj <= obj_min:
                            j = t
                            obj_min = obj
        if gmax + gmax2 < tol or j == -1:
            break
        it += 1
        jl = j % l
        q_ij = y[i] * y[j] * K[il, jl]
        old_ai = alpha[i]
        old_aj = alpha[j]
        if y[i] != y[j]:
            quad = K[il, il] + K[jl, jl] + 2.0 * q_ij
            if quad <= 0.0:
                quad = TAU
            delta = (-G[i] - G[j]) / quad
            diff = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0.0:
                if alpha[j] < 0.0:
                    alpha[j] = 0.0
                    alpha[i] = diff
            else:
                if alpha[i] < 0.0:
                    alpha[i] = 0.0
                    alpha[j] = -diff
            if diff > 0.0:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = C - diff
            else:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = C + diff
        else:
            quad = K[il, il] + K[jl, jl] - 2.0 * q_ij
            if quad <= 0.0:
                quad = TAU
            delta = (G[i] - G[j]) / quad
            total = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if total > C:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = total - C
            else:
                if alpha[j] < 0.0:
                    alpha[j] = 0.0
                    alpha[i] = total
            if total > C:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = total - C
            else:
                if alpha[i] < 0.0:
                    alpha[i] = 0.0
                    alpha[j] = total
        dai = alpha[i] - old_ai
        daj = alpha[j] - old_aj
        for t in range(n):
            tl = t % l
            G[t] += y[t] * (y[i] * K[il, tl] * dai + y[j] * K[jl, tl] * daj)
    rho = _rho(alpha, y, G, C)
    return alpha, rho, it


def _rho(alpha, y, G, C):
    ub = np.inf
    lb = -np.inf
    total = 0.0
    nfree = 0
    for t in range(alpha.shape[0]):
        yg = y[t] * G[t]
        if alpha[t] >= C:
            if y[t] < 0.0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        elif alpha[t] <= 0.0:
            if y[t] > 0.0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        else:
            nfree += 1
            total += yg
    if nfree > 0:
        return total / nfree
    return 0.5 * (ub + lb)


_rho = njit(_rho)
smo_jit = njit(_smo_loops)


def _last_argmax(v):
    return v.shape[0] - 1 - int(np.argmax(v[::-1]))


def smo_numpy(K, z, C, eps, tol, max_iter):
    l = K.shape[0]
    n = 2 * l
    idx = np.arange(n) % l
    y = np.concatenate((np.ones(l), -np.ones(l)))
    pos = y > 0
    alpha = np.zeros(n)
    G = np.concatenate((eps - z, eps + z))
    diagK = np.diag(K)[idx]
    it = 0
    while it < max_iter:
        up = np.where(pos, alpha < C, alpha > 0.0)
        score = np.where(pos, -G, G)
        score = np.where(up, score, -np.inf)
        i = _last_argmax(score)
        gmax = score[i]
        if not np.isfinite(gmax):
            break
        krow_i = K[idx[i]][idx]
        q_i = y[i] * y * krow_i
        low = np.where(pos, alpha > 0.0, alpha < C)
        cand = np.where(pos, G, -G)
        gmax2 = np.max(np.where(low, cand, -np.inf))
        grad_diff = gmax + cand
        quad = diagK[i] + diagK - 2.0 * y[i] * y * q_i
        quad = np.where(quad <= 0.0, TAU, quad)
        ok = low & (grad_diff > 0.0)
        if gmax + gmax2 < tol or not ok.any():
            break
        obj = np.where(ok, -(grad_diff * grad_diff) / quad, np.inf)
        j = _last_argmax(-obj)
        it += 1
        krow_j = K[idx[j]][idx]
        q_ij = q_i[j]
        old_ai, old_aj = alpha[i], alpha[j]
        ai, aj = old_ai, old_aj
        if y[i] != y[j]:
            qc = diagK[i] + diagK[j] + 2.0 * q_ij
            if qc <= 0.0:
                qc = TAU
            delta = (-G[i] - G[j]) / qc
            diff = ai - aj
            ai += delta
            aj += delta
            if diff > 0.0:
                if aj < 0.0:
                    aj, ai = 0.0, diff
            elif ai < 0.0:
                ai, aj = 0.0, -diff
            if diff > 0.0:
                if ai > C:
                    ai, aj = C, C - diff
            elif aj > C:
                aj, ai = C, C + diff
        else:
            qc = diagK[i] + diagK[j] - 2.0 * q_ij
            if qc <= 0.0:
                qc = TAU
            delta = (G[i] - G[j]) / qc
            total = ai + aj
            ai -= delta
            aj += delta
            if total > C:
                if ai > C:
                    ai, aj = C, total - C
            elif aj < 0.0:
                aj, ai = 0.0, total
            if total > C:
                if aj > C:
                    aj, ai = C, total - C
            elif ai < 0.0:
                ai, aj = 0.0, total
        alpha[i], alpha[j] = ai, aj
        G += y * (y[i] * krow_i * (ai - old_ai) + y[j] * krow_j * (aj - old_aj))
    yg = y * G
    at_upper = alpha >= C
    at_lower = alpha <= 0.0
    free = ~(at_upper | at_lower)
    if free.any():
        rho = float(yg[free].sum() / free.sum())
    else:
        ub_mask = (at_upper & ~pos) | (at_lower & pos)
        lb_mask = (at_upper & pos) | (at_lower & ~pos)
        ub = yg[ub_mask].min() if ub_mask.any() else np.inf
        lb = yg[lb_mask].max() if lb_mask.any() else -np.inf
        rho = 0.5 * (ub + lb)
    return alpha, rho, it


smo = pick(smo_jit, smo_numpy)
