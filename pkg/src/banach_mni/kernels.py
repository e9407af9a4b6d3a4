"""Hot loops: proximal iterations and simplex pivoting.

Everything here operates on dense float64 arrays restricted to the union
support of the sampling rows, and is compiled with numba unless
``BANACH_MNI_DISABLE_JIT`` is set (see :mod:`banach_mni._jit`). The bodies
stay inside the numpy subset numba understands, so the uncompiled path
is ordinary numpy code computing the same iterates.

Loss codes: ``SQUARE`` is ||z - y||^2, ``HINGE`` is sum max(1 - y_j z_j, 0),
``EPS_INSENSITIVE`` is sum max(|z_j - y_j| - eps, 0).
"""

import numpy as np

from ._jit import kernel

SQUARE = 0
HINGE = 1
EPS_INSENSITIVE = 2

LP_OPTIMAL = 0
LP_UNBOUNDED = 1
LP_ITERATION_LIMIT = 2


@kernel
def soft_threshold_dense(v, t):
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


@kernel
def prox_hinge_scalar(a, y, sigma):
    s = y * a
    if s >= 1.0:
        return a
    if s >= 1.0 - sigma:
        return y
    return y * (s + sigma)


@kernel
def prox_eps_scalar(a, y, eps, sigma):
    r = a - y
    if r >= eps + sigma:
        return a - sigma
    if r >= eps:
        return y + eps
    if r > -eps:
        return a
    if r > -eps - sigma:
        return y - eps
    return a + sigma


@kernel
def prox_loss(a, y, kind, eps, sigma):
    """prox of ``sigma * Q_y`` at ``a``."""
    out = np.empty_like(a)
    if kind == SQUARE:
        for j in range(a.size):
            out[j] = (a[j] + 2.0 * sigma * y[j]) / (1.0 + 2.0 * sigma)
    elif kind == HINGE:
        for j in range(a.size):
            out[j] = prox_hinge_scalar(a[j], y[j], sigma)
    else:
        for j in range(a.size):
            out[j] = prox_eps_scalar(a[j], y[j], eps, sigma)
    return out


@kernel
def prox_loss_conj(a, y, kind, eps, sigma):
    """prox of ``sigma * Q_y^*`` at ``a`` through the scaled Moreau identity."""
    return a - sigma * prox_loss(a / sigma, y, kind, eps, 1.0 / sigma)


@kernel
def _truncated(u, rtol):
    top = np.max(np.abs(u)) if u.size > 0 else 0.0
    out = np.zeros_like(u)
    if top > 0.0:
        for j in range(u.size):
            if abs(u[j]) >= (1.0 - rtol) * top:
                out[j] = u[j]
    return out


@kernel
def _prox_residual(x, shifted):
    return np.sum(np.abs(x - soft_threshold_dense(x - shifted, 1.0)))


@kernel
def mni_l1_residuals(A, AT, y, x, c, rtol):
    """Fixed-point residuals of the l1 interpolation equations.

    Returns ``(||L x - y||_inf, ||x - soft(x - S(L^* c), 1)||_1)``.
    """
    r_interp = np.max(np.abs(A @ x - y)) if y.size > 0 else 0.0
    r_prox = _prox_residual(x, _truncated(AT @ c, rtol)) if x.size > 0 else 0.0
    return r_interp, r_prox


@kernel
def reg_l1_residuals(A, AT, y, kind, eps, lam, x, c, rtol):
    """Fixed-point residuals of the l1 regularization equations."""
    z = c + A @ x
    r_dual = np.max(np.abs(c - prox_loss_conj(z, y, kind, eps, 1.0))) if y.size > 0 else 0.0
    r_prox = _prox_residual(x, _truncated(AT @ c, rtol) / lam) if x.size > 0 else 0.0
    return r_dual, r_prox


@kernel
def pdhg_mni_l1(A, AT, y, x, c, tau, sigma, theta, max_iter, tol, rtol, check_every):
    """Extrapolated primal-dual iteration for min ||x||_1 s.t. A x = y.

    Dual step: prox of sigma * (indicator of y)^*, i.e. ``c + sigma (A xbar - y)``.
    Primal step: soft thresholding with threshold ``tau``.
    Stops once both fixed-point residuals are below ``tol``; otherwise the
    checkpoint with the smallest residual is returned.
    Returns ``(x, c, iterations, r_interp, r_prox, converged)``.
    """
    x = x.copy()
    c = c.copy()
    xbar = x.copy()
    r1, r2 = mni_l1_residuals(A, AT, y, x, c, rtol)
    if r1 <= tol and r2 <= tol:
        return x, c, 0, r1, r2, True
    bx, bc, b1, b2 = x.copy(), c.copy(), r1, r2
    it = 0
    while it < max_iter:
        it += 1
        c = c + sigma * (A @ xbar - y)
        x_new = soft_threshold_dense(x - tau * (AT @ c), tau)
        xbar = x_new + theta * (x_new - x)
        x = x_new
        if it % check_every == 0 or it == max_iter:
            r1, r2 = mni_l1_residuals(A, AT, y, x, c, rtol)
            if r1 <= tol and r2 <= tol:
                return x, c, it, r1, r2, True
            if max(r1, r2) < max(b1, b2):
                bx, bc, b1, b2 = x.copy(), c.copy(), r1, r2
    return bx, bc, it, b1, b2, False


@kernel
def pdhg_reg_l1(A, AT, y, kind, eps, lam, x, c, tau, sigma, theta, max_iter, tol, rtol,
                check_every):
    """Primal-dual iteration for min Q_y(A x) + lam ||x||_1 with a prox-friendly loss."""
    x = x.copy()
    c = c.copy()
    xbar = x.copy()
    r1, r2 = reg_l1_residuals(A, AT, y, kind, eps, lam, x, c, rtol)
    if r1 <= tol and r2 <= tol:
        return x, c, 0, r1, r2, True
    bx, bc, b1, b2 = x.copy(), c.copy(), r1, r2
    it = 0
    while it < max_iter:
        it += 1
        c = prox_loss_conj(c + sigma * (A @ xbar), y, kind, eps, sigma)
        x_new = soft_threshold_dense(x - tau * (AT @ c), tau * lam)
        xbar = x_new + theta * (x_new - x)
        x = x_new
        if it % check_every == 0 or it == max_iter:
            r1, r2 = reg_l1_residuals(A, AT, y, kind, eps, lam, x, c, rtol)
            if r1 <= tol and r2 <= tol:
                return x, c, it, r1, r2, True
            if max(r1, r2) < max(b1, b2):
                bx, bc, b1, b2 = x.copy(), c.copy(), r1, r2
    return bx, bc, it, b1, b2, False


@kernel
def fista_lasso(A, AT, y, lam, x, step, max_iter, tol, rtol, check_every):
    """Accelerated proximal gradient for min ||A x - y||^2 + lam ||x||_1.

    Uses gradient-based adaptive restart. The certifying multiplier is the
    loss gradient ``2 (A x - y)``.
    Returns ``(x, iterations, r_dual, r_prox, converged)``.
    """
    x = x.copy()
    z = x.copy()
    t = 1.0
    c = 2.0 * (A @ x - y)
    r1, r2 = reg_l1_residuals(A, AT, y, SQUARE, 0.0, lam, x, c, rtol)
    if r1 <= tol and r2 <= tol:
        return x, 0, r1, r2, True
    bx, b1, b2 = x.copy(), r1, r2
    it = 0
    while it < max_iter:
        it += 1
        grad = 2.0 * (AT @ (A @ z - y))
        x_new = soft_threshold_dense(z - step * grad, step * lam)
        if np.dot(z - x_new, x_new - x) > 0.0:
            t = 1.0
            z = x_new.copy()
        else:
            t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
            z = x_new + ((t - 1.0) / t_new) * (x_new - x)
            t = t_new
        x = x_new
        if it % check_every == 0 or it == max_iter:
            c = 2.0 * (A @ x - y)
            r1, r2 = reg_l1_residuals(A, AT, y, SQUARE, 0.0, lam, x, c, rtol)
            if r1 <= tol and r2 <= tol:
                return x, it, r1, r2, True
            if max(r1, r2) < max(b1, b2):
                bx, b1, b2 = x.copy(), r1, r2
    return bx, it, b1, b2, False


@kernel
def hilbert_fixed_point_residual(G, y, kind, eps, lam, c):
    """``||c + prox_{Q*}(-2 lam c + G c) / (2 lam)||_inf``."""
    v = prox_loss_conj(-2.0 * lam * c + G @ c, y, kind, eps, 1.0)
    return np.max(np.abs(c + v / (2.0 * lam)))


@kernel
def fista_hilbert_dual(G, y, kind, eps, lam, c, step, max_iter, tol, check_every):
    """Accelerated forward-backward on d = -2 lam c for the Hilbert coefficient problem.

    Minimizes ``Q*(d) + d^T G d / (4 lam)``; its fixed-point form with unit
    step is ``c = -prox_{Q*}(-2 lam c + G c) / (2 lam)``.
    Returns ``(c, iterations, residual, converged)``.
    """
    d = -2.0 * lam * c
    w = d.copy()
    t = 1.0
    res = hilbert_fixed_point_residual(G, y, kind, eps, lam, c)
    if res <= tol:
        return c, 0, res, True
    best_c, best = c.copy(), res
    it = 0
    while it < max_iter:
        it += 1
        d_new = prox_loss_conj(w - step * (G @ w) / (2.0 * lam), y, kind, eps, step)
        if np.dot(w - d_new, d_new - d) > 0.0:
            t = 1.0
            w = d_new.copy()
        else:
            t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
            w = d_new + ((t - 1.0) / t_new) * (d_new - d)
            t = t_new
        d = d_new
        if it % check_every == 0 or it == max_iter:
            c = -d / (2.0 * lam)
            res = hilbert_fixed_point_residual(G, y, kind, eps, lam, c)
            if res <= tol:
                return c, it, res, True
            if res < best:
                best_c, best = c.copy(), res
    return best_c, it, best, False


@kernel
def simplex_pivot(T, r, k):
    """Gauss-Jordan pivot of tableau ``T`` on entry (r, k), in place."""
    T[r, :] = T[r, :] / T[r, k]
    for i in range(T.shape[0]):
        if i != r:
            f = T[i, k]
            if f != 0.0:
                T[i, :] = T[i, :] - f * T[r, :]


@kernel
def simplex_iterate(T, basis, n_enter, tol, max_iter):
    """Primal simplex on a tableau in canonical form, Bland's rule.

    ``T`` has one row per constraint plus a final reduced-cost row; the
    last column is the right-hand side. Only columns ``< n_enter`` may
    enter the basis. Returns ``(status, pivots)``.
    """
    n_rows = T.shape[0] - 1
    rhs = T.shape[1] - 1
    pivots = 0
    while pivots < max_iter:
        k = -1
        for j in range(n_enter):
            if T[n_rows, j] < -tol:
                k = j
                break
        if k < 0:
            return LP_OPTIMAL, pivots
        r = -1
        best = 0.0
        for i in range(n_rows):
            a = T[i, k]
            if a > tol:
                ratio = T[i, rhs] / a
                if r < 0:
                    r, best = i, ratio
                else:
                    gap = 1e-12 * (1.0 + abs(best))
                    if ratio < best - gap or (abs(ratio - best) <= gap and basis[i] < basis[r]):
                        r, best = i, ratio
        if r < 0:
            return LP_UNBOUNDED, pivots
        simplex_pivot(T, r, k)
        basis[r] = k
        pivots += 1
    return LP_ITERATION_LIMIT, pivots
