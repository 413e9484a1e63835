"""Conditional-sum-of-squares residuals for ARMA(p, q) with a constant.

The recursion starts at ``t = p`` (the first ``p`` observations are
conditioned on) with zero presample errors::

    e[t] = w[t] - c - sum_i phi[i] * w[t-1-i] - sum_j theta[j] * e[t-1-j]
"""

from __future__ import annotations

import numpy as np
from scipy.signal import lfilter

from ..accel import njit, pick


def _css_residuals_loops(w, c, phi, theta):
    n = w.shape[0]
    p = phi.shape[0]
    q = theta.shape[0]
    m = n - p
    e = np.zeros(m if m > 0 else 0)
    for t in range(p, n):
        acc = w[t] - c
        for i in range(p):
            acc -= phi[i] * w[t - 1 - i]
        k = t - p
        for j in range(q):
            if k - 1 - j >= 0:
                acc -= theta[j] * e[k - 1 - j]
        e[k] = acc
    return e


def _css_sse_loops(w, c, phi, theta, start):
    n = w.shape[0]
    p = phi.shape[0]
    q = theta.shape[0]
    e = np.zeros(q + 1)
    sse = 0.0
    for t in range(p, n):
        acc = w[t] - c
        for i in range(p):
            acc -= phi[i] * w[t - 1 - i]
        for j in range(q):
            acc -= theta[j] * e[j]
        for j in range(q - 1, 0, -1):
            e[j] = e[j - 1]
        if q > 0:
            e[0] = acc
        if t >= start:
            sse += acc * acc
        if not np.isfinite(acc):
            return np.inf
    return sse


def _ar_stable_loops(a):
    """True if 1 - a[0] z - ... - a[k-1] z^k has all roots outside |z| = 1.

    Step-down (Schur-Cohn) recursion on the reflection coefficients.
    """
    k = a.shape[0]
    cur = a.copy()
    for m in range(k, 0, -1):
        kappa = cur[m - 1]
        if not abs(kappa) < 1.0:
            return False
        den = 1.0 - kappa * kappa
        nxt = np.empty(m - 1)
        for j in range(m - 1):
            nxt[j] = (cur[j] + kappa * cur[m - 2 - j]) / den
        cur = nxt
    return True


def _css_objective_loops(x, w, p, q, has_const, start, radius):
    """CSS objective over a packed vector [const?, phi..., theta...].

    Returns inf unless all AR and MA roots lie outside ``|z| = radius``.
    """
    off = 1 if has_const else 0
    c = x[0] if has_const else 0.0
    phi = x[off : off + p].copy()
    theta = x[off + p : off + p + q].copy()
    sphi = phi.copy()
    stheta = -theta
    scale = 1.0
    for i in range(p):
        scale *= radius
        sphi[i] *= scale
    scale = 1.0
    for j in range(q):
        scale *= radius
        stheta[j] *= scale
    if not _ar_stable(sphi) or not _ar_stable(stheta):
        return np.inf
    return css_sse_jit(w, c, phi, theta, start)


_ar_stable = njit(_ar_stable_loops)
css_residuals_jit = njit(_css_residuals_loops)
css_sse_jit = njit(_css_sse_loops)
css_objective_jit = njit(_css_objective_loops)
ar_stable_jit = _ar_stable


def css_residuals_numpy(w, c, phi, theta):
    p = phi.shape[0]
    n = w.shape[0]
    u = w[p:] - c
    for i in range(p):
        u = u - phi[i] * w[p - 1 - i : n - 1 - i]
    if theta.shape[0] == 0:
        return u
    return lfilter([1.0], np.concatenate(([1.0], theta)), u)


def css_sse_numpy(w, c, phi, theta, start):
    with np.errstate(over="ignore", invalid="ignore"):
        e = css_residuals_numpy(w, c, phi, theta)[max(start - phi.shape[0], 0) :]
        sse = float(np.dot(e, e))
    return sse if np.isfinite(sse) else np.inf


def ar_stable_numpy(a, radius=1.0):
    a = np.asarray(a, dtype=np.float64)
    if a.size == 0:
        return True
    roots = np.roots(np.concatenate((-a[::-1], [1.0])))
    return bool(np.all(np.abs(roots) > radius))


def css_objective_numpy(x, w, p, q, has_const, start, radius):
    off = 1 if has_const else 0
    c = x[0] if has_const else 0.0
    phi = x[off : off + p]
    theta = x[off + p : off + p + q]
    if not ar_stable_numpy(phi, radius) or not ar_stable_numpy(-theta, radius):
        return np.inf
    return css_sse_numpy(w, c, phi, theta, start)


def _ar_stable_scaled_jit(a, radius=1.0):
    a = np.asarray(a, dtype=np.float64)
    return bool(ar_stable_jit(a * radius ** np.arange(1, a.size + 1)))


ar_stable = pick(_ar_stable_scaled_jit, ar_stable_numpy)
css_objective = pick(css_objective_jit, css_objective_numpy)
css_residuals = pick(css_residuals_jit, css_residuals_numpy)
css_sse = pick(css_sse_jit, css_sse_numpy)


# ---------------------------------------------------------------- optimizer

def _css_nelder_mead_loops(sim, w, p, q, has_const, start, radius, xatol, fatol,
                           maxiter, maxfev, adaptive):
    """Nelder-Mead on the CSS objective with scipy's update rules.

    Returns (x, fval, iterations, converged).
    """
    N = sim.shape[1]
    if adaptive:
        rho, chi, psi, sigma = 1.0, 1.0 + 2.0 / N, 0.75 - 1.0 / (2.0 * N), 1.0 - 1.0 / N
    else:
        rho, chi, psi, sigma = 1.0, 2.0, 0.5, 0.5
    sim = sim.copy()
    fsim = np.empty(N + 1)
    for k in range(N + 1):
        fsim[k] = _css_objective_jit(sim[k], w, p, q, has_const, start, radius)
    fcalls = N + 1
    order = np.argsort(fsim, kind="mergesort")
    sim = sim[order]
    fsim = fsim[order]
    it = 1
    converged = False
    while fcalls < maxfev and it < maxiter:
        xspread = 0.0
        fspread = 0.0
        for k in range(1, N + 1):
            fspread = max(fspread, abs(fsim[0] - fsim[k]))
            for j in range(N):
                xspread = max(xspread, abs(sim[k, j] - sim[0, j]))
        if xspread <= xatol and fspread <= fatol:
            converged = True
            break
        xbar = np.zeros(N)
        for k in range(N):
            xbar += sim[k]
        xbar /= N
        worst = sim[N].copy()
        xr = (1.0 + rho) * xbar - rho * worst
        fxr = _css_objective_jit(xr, w, p, q, has_const, start, radius)
        fcalls += 1
        shrink = False
        if fxr < fsim[0]:
            xe = (1.0 + rho * chi) * xbar - rho * chi * worst
            fxe = _css_objective_jit(xe, w, p, q, has_const, start, radius)
            fcalls += 1
            if fxe < fxr:
                sim[N] = xe
                fsim[N] = fxe
            else:
                sim[N] = xr
                fsim[N] = fxr
        elif fxr < fsim[N - 1]:
            sim[N] = xr
            fsim[N] = fxr
        elif fxr < fsim[N]:
            xc = (1.0 + psi * rho) * xbar - psi * rho * worst
            fxc = _css_objective_jit(xc, w, p, q, has_const, start, radius)
            fcalls += 1
            if fxc <= fxr:
                sim[N] = xc
                fsim[N] = fxc
            else:
                shrink = True
        else:
            xcc = (1.0 - psi) * xbar + psi * worst
            fxcc = _css_objective_jit(xcc, w, p, q, has_const, start, radius)
            fcalls += 1
            if fxcc < fsim[N]:
                sim[N] = xcc
                fsim[N] = fxcc
            else:
                shrink = True
        if shrink:
            for k in range(1, N + 1):
                sim[k] = sim[0] + sigma * (sim[k] - sim[0])
                fsim[k] = _css_objective_jit(sim[k], w, p, q, has_const, start, radius)
                fcalls += 1
        it += 1
        order = np.argsort(fsim, kind="mergesort")
        sim = sim[order]
        fsim = fsim[order]
    return sim[0].copy(), fsim[0], it, converged


_css_objective_jit = css_objective_jit
css_nelder_mead_jit = njit(_css_nelder_mead_loops)


def css_nelder_mead_numpy(sim, w, p, q, has_const, start, radius, xatol, fatol,
                          maxiter, maxfev, adaptive):
    from scipy.optimize import minimize

    res = minimize(
        css_objective_numpy, sim[0], args=(w, p, q, has_const, start, radius),
        method="Nelder-Mead",
        options=dict(initial_simplex=sim, xatol=xatol, fatol=fatol, maxiter=maxiter,
                     maxfev=maxfev, adaptive=adaptive),
    )
    return res.x, float(res.fun), int(res.nit), bool(res.success)


css_nelder_mead = pick(css_nelder_mead_jit, css_nelder_mead_numpy)
