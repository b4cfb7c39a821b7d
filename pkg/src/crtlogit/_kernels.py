"""Numba-compiled coordinate descent kernels.

Hot loops only; all validation, warm-start management and error handling
live in :mod:`crtlogit.solvers`.  Design matrices are expected in Fortran
order so that column access is contiguous.  Kernels are single-threaded
and release the GIL, so callers may run many fits concurrently from a
thread pool without losing determinism.
"""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def sigmoid(t):
    # overflow-safe in both tails
    if t >= 0.0:
        return 1.0 / (1.0 + np.exp(-t))
    q = np.exp(t)
    return q / (1.0 + q)


@njit(cache=True, nogil=True)
def log1pexp(t):
    # log(1 + e^t) without overflow
    if t > 0.0:
        return t + np.log1p(np.exp(-t))
    return np.log1p(np.exp(t))


@njit(cache=True, nogil=True)
def logistic_negloglik(eta, y):
    n = eta.shape[0]
    acc = 0.0
    for i in range(n):
        acc += log1pexp(eta[i]) - y[i] * eta[i]
    return acc / n


@njit(cache=True, nogil=True)
def _soft_threshold(z, thresh):
    if z > thresh:
        return z - thresh
    if z < -thresh:
        return z + thresh
    return 0.0


@njit(cache=True, nogil=True, inline="always")
def _logistic_update(X, y, beta, eta, prob, colsq, lam, j):
    """Proximal step on coordinate j; returns the coordinate move."""
    n = X.shape[0]
    acc = 0.0
    for i in range(n):
        acc += X[i, j] * (prob[i] - y[i])
    grad = acc / n
    step = 0.25 * colsq[j]
    z = beta[j] - grad / step
    new = _soft_threshold(z, lam / step)
    delta = new - beta[j]
    if delta != 0.0:
        beta[j] = new
        for i in range(n):
            eta[i] += delta * X[i, j]
            prob[i] = sigmoid(eta[i])
    return delta


@njit(cache=True, nogil=True)
def _record_logistic_objective(X, y, beta, eta, lam, objectives, sweep):
    l1 = 0.0
    for j in range(beta.shape[0]):
        l1 += abs(beta[j])
    objectives[sweep] = logistic_negloglik(eta, y) + lam * l1


@njit(cache=True, nogil=True)
def logistic_cd(X, y, lam, tol, max_iter, beta, objectives):
    """Coordinate descent for the l1-penalized logistic objective.

    Each coordinate takes a proximal step with the curvature bound
    ||X_j||^2 / (4n) (the logistic Hessian is at most 1/4 pointwise), so
    the objective is non-increasing at every update.  Sweeps alternate
    between the full coordinate cycle and cheap cycles over the current
    support (active set); convergence requires a full cycle whose largest
    move is at most ``tol``, which certifies the stationarity conditions.

    ``beta`` is the warm start and is overwritten in place; ``objectives``
    must have room for ``max_iter`` entries and receives the objective
    after every sweep (full or active).  Returns (sweeps, converged).
    """
    n, p = X.shape
    colsq = np.empty(p)
    for j in range(p):
        s = 0.0
        for i in range(n):
            s += X[i, j] * X[i, j]
        colsq[j] = s / n

    eta = np.zeros(n)
    for j in range(p):
        bj = beta[j]
        if bj != 0.0:
            for i in range(n):
                eta[i] += bj * X[i, j]
    prob = np.empty(n)
    for i in range(n):
        prob[i] = sigmoid(eta[i])

    active = np.empty(p, dtype=np.int64)
    sweeps = 0
    converged = False
    while sweeps < max_iter:
        # full cycle: makes progress everywhere and checks optimality
        max_delta = 0.0
        for j in range(p):
            if colsq[j] <= 0.0:
                continue
            delta = _logistic_update(X, y, beta, eta, prob, colsq, lam, j)
            if abs(delta) > max_delta:
                max_delta = abs(delta)
        _record_logistic_objective(X, y, beta, eta, lam, objectives, sweeps)
        sweeps += 1
        if max_delta <= tol:
            converged = True
            break
        # active cycles: iterate the support until it stabilizes
        n_active = 0
        for j in range(p):
            if beta[j] != 0.0 and colsq[j] > 0.0:
                active[n_active] = j
                n_active += 1
        while sweeps < max_iter and n_active > 0:
            max_delta = 0.0
            for k in range(n_active):
                delta = _logistic_update(
                    X, y, beta, eta, prob, colsq, lam, active[k]
                )
                if abs(delta) > max_delta:
                    max_delta = abs(delta)
            _record_logistic_objective(X, y, beta, eta, lam, objectives, sweeps)
            sweeps += 1
            if max_delta <= tol:
                break
    return sweeps, converged


@njit(cache=True, nogil=True, inline="always")
def _lasso_update(A, w, beta, resid, curv, lam, n, j):
    acc = 0.0
    for i in range(n):
        acc += w[i] * A[i, j] * resid[i]
    rho = 2.0 * acc / n + curv[j] * beta[j]
    new = _soft_threshold(rho, lam) / curv[j]
    delta = new - beta[j]
    if delta != 0.0:
        beta[j] = new
        for i in range(n):
            resid[i] -= delta * A[i, j]
    return delta


@njit(cache=True, nogil=True)
def _record_lasso_objective(w, beta, resid, lam, n, objectives, sweep):
    obj = 0.0
    for i in range(n):
        obj += w[i] * resid[i] * resid[i]
    obj /= n
    for j in range(beta.shape[0]):
        obj += lam * abs(beta[j])
    objectives[sweep] = obj


@njit(cache=True, nogil=True)
def weighted_lasso_cd(A, target, w, lam, tol, max_iter, beta, objectives):
    """Coordinate descent for the per-sample-weighted lasso.

    Objective: (1/n) sum_i w_i (target_i - A_i beta)^2 + lam * ||beta||_1
    (no extra 1/2 factor).  Coordinates with zero weighted curvature are
    skipped; their gradient vanishes identically.  Same active-set and
    in/out conventions as :func:`logistic_cd`.
    """
    n, p = A.shape
    curv = np.empty(p)
    for j in range(p):
        s = 0.0
        for i in range(n):
            s += w[i] * A[i, j] * A[i, j]
        curv[j] = 2.0 * s / n

    resid = target.copy()
    for j in range(p):
        bj = beta[j]
        if bj != 0.0:
            for i in range(n):
                resid[i] -= bj * A[i, j]

    active = np.empty(p, dtype=np.int64)
    sweeps = 0
    converged = False
    while sweeps < max_iter:
        max_delta = 0.0
        for j in range(p):
            if curv[j] <= 0.0:
                continue
            delta = _lasso_update(A, w, beta, resid, curv, lam, n, j)
            if abs(delta) > max_delta:
                max_delta = abs(delta)
        _record_lasso_objective(w, beta, resid, lam, n, objectives, sweeps)
        sweeps += 1
        if max_delta <= tol:
            converged = True
            break
        n_active = 0
        for j in range(p):
            if beta[j] != 0.0 and curv[j] > 0.0:
                active[n_active] = j
                n_active += 1
        while sweeps < max_iter and n_active > 0:
            max_delta = 0.0
            for k in range(n_active):
                delta = _lasso_update(A, w, beta, resid, curv, lam, n, active[k])
                if abs(delta) > max_delta:
                    max_delta = abs(delta)
            _record_lasso_objective(w, beta, resid, lam, n, objectives, sweeps)
            sweeps += 1
            if max_delta <= tol:
                break
    return sweeps, converged


@njit(cache=True, nogil=True)
def logistic_deviance(eta, y):
    """Mean deviance (-2 x log-likelihood per sample) for linear predictor eta."""
    return 2.0 * logistic_negloglik(eta, y)
