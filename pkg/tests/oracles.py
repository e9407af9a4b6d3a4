"""Reference solvers that share no code with the package.

They are slow and only meant for the small instances used in tests.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def min_norm_l2(a, y):
    """Hilbert interpolation via the pseudoinverse."""
    return np.linalg.pinv(a) @ y


def basis_pursuit_enumeration(a, y, tol=1e-10):
    """min ||x||_1 s.t. a x = y by checking every basic solution.

    Some optimum of the LP has at most rank(a) nonzeros, so it is enough
    to solve the square subsystems on every column subset of that size
    (and smaller, when a subset's columns are dependent).
    """
    m, n = a.shape
    if not np.any(y):
        return 0.0, np.zeros(n)
    best, arg = math.inf, None
    for k in range(1, m + 1):
        for cols in itertools.combinations(range(n), k):
            sub = a[:, cols]
            if np.linalg.matrix_rank(sub, tol=1e-10) < k:
                continue
            z, *_ = np.linalg.lstsq(sub, y, rcond=None)
            if np.max(np.abs(sub @ z - y)) > tol * (1 + np.max(np.abs(y))):
                continue
            val = float(np.abs(z).sum())
            if val < best:
                best = val
                arg = np.zeros(n)
                arg[list(cols)] = z
    return best, arg


def lp_projected_gradient(a, y, p, iters=200000, tol=1e-13):
    """min ||x||_p s.t. a x = y by projected gradient on ||x||_p^p / p.

    The feasible set is affine, so the projection is x -> x - a^+ (a x - y).
    Steps are chosen by Barzilai-Borwein with an Armijo safeguard.
    """
    pinv = np.linalg.pinv(a)
    proj = np.eye(a.shape[1]) - pinv @ a

    def f(x):
        return float(np.sum(np.abs(x) ** p) / p)

    def g(x):
        return proj @ (np.sign(x) * np.abs(x) ** (p - 1))

    x = pinv @ y
    gx = g(x)
    step = 1.0
    stalled = 0
    for _ in range(iters):
        if np.linalg.norm(gx) <= tol:
            break
        fx = f(x)
        t = step
        while True:
            xn = x - t * gx
            if f(xn) <= fx - 1e-4 * t * gx @ gx or t < 1e-20:
                break
            t *= 0.5
        xn = xn - pinv @ (a @ xn - y)  # remove drift off the affine set
        stalled = stalled + 1 if fx - f(xn) <= 1e-15 * fx else 0
        if stalled >= 20:
            break
        gn = g(xn)
        s, r = xn - x, gn - gx
        sr = s @ r
        step = (s @ s) / sr if sr > 0 else 1.0
        x, gx = xn, gn
    return float(np.sum(np.abs(x) ** p) ** (1 / p)), x


def lasso_coordinate_descent(a, y, lam, sweeps=20000, tol=1e-13):
    """min ||a x - y||^2 + lam ||x||_1 by cyclic coordinate minimization."""
    n = a.shape[1]
    x = np.zeros(n)
    r = y - a @ x
    col_sq = np.sum(a * a, axis=0)
    for _ in range(sweeps):
        delta = 0.0
        for j in range(n):
            if col_sq[j] == 0:
                continue
            rho = a[:, j] @ r + col_sq[j] * x[j]
            # minimize col_sq z^2 - 2 rho z + lam |z|
            z = np.sign(rho) * max(abs(rho) - lam / 2, 0.0) / col_sq[j]
            if z != x[j]:
                r -= a[:, j] * (z - x[j])
                delta = max(delta, abs(z - x[j]))
                x[j] = z
        if delta <= tol:
            break
    return x


def grid_refine_min(f, lo, hi, dim, points=41, levels=40):
    """Minimize f over a box by a full grid, then repeatedly re-grid around the best point.

    At each level the box shrinks by a factor 4 around the incumbent.
    The grid is dense in every coordinate at once, so unlike coordinate
    search it does not stall at kinks of nonseparable terms.
    """
    lo = np.full(dim, float(lo))
    hi = np.full(dim, float(hi))
    best_x, best_f = None, math.inf
    for _ in range(levels):
        axes = [np.linspace(lo[k], hi[k], points) for k in range(dim)]
        for pt in itertools.product(*axes):
            v = f(np.array(pt))
            if v < best_f:
                best_f, best_x = v, np.array(pt)
        half = (hi - lo) / 8
        lo, hi = best_x - half, best_x + half
        points = min(points, 9) if dim > 1 else points
    return best_f, best_x


def golden_min_1d(f, lo, hi, iters=200):
    """Plain golden-section search on [lo, hi]."""
    inv = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c, d = b - inv * (b - a), a + inv * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - inv * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv * (b - a)
            fd = f(d)
    return (a + b) / 2
