"""Minimum-norm interpolation: find the smallest x with L x = y.

Three spaces are supported:

* ``hilbert`` (l2): the coefficients solve the Gram system ``G c = y`` and
  ``x = L^* c``.
* ``lp`` with 1 < p < inf: ``x`` is the duality-map image of ``L^* c`` and
  ``c`` solves ``L(dmap_lq(L^* c)) = y``, handled by damped Newton.
* ``l1``: a primal-dual proximal iteration whose dual variable ``c``
  satisfies ``-L^* c`` in the subdifferential of ``||.||_1`` at ``x``.
  The output is certified by the residuals of the truncated
  fixed-point equations (:func:`fixed_point_residual_l1`).
"""

from __future__ import annotations

import math

import numpy as np

from . import kernels
from .duality import MAX_INDEX_RTOL, dmap_lq
from .exceptions import DegenerateInputError, DegenerateOperatorError, NonConvergenceError, ParameterError
from .prox import prox_indicator_conj
from .report import IterationConfig, SolveReport
from .sampling import SamplingOperator, gram_matrix
from .sequence import Space, SparseSeq, pnorm

__all__ = [
    "GRAM_EIG_TOL",
    "solve_mni",
    "solve_mni_hilbert",
    "solve_mni_lp_space",
    "solve_mni_l1",
    "fixed_point_residual_l1",
    "infimum_report",
    "newton_solve",
]

#: smallest Gram eigenvalue accepted as positive definite
GRAM_EIG_TOL = 1e-10

_NEWTON_HALVINGS = 60
#: Newton gives up when the best residual has not halved over this many iterations
_STAGNATION_WINDOW = 100


class _Progress:
    def __init__(self):
        self.best = math.inf
        self.mark = math.inf
        self.since = 0

    def update(self, res: float) -> None:
        self.best = min(self.best, res)
        if self.best <= 0.5 * self.mark:
            self.mark = self.best
            self.since = 0
        else:
            self.since += 1
        if self.since >= _STAGNATION_WINDOW:
            raise NonConvergenceError(
                f"Newton stagnated: no halving of the residual in {_STAGNATION_WINDOW} iterations",
                self.best,
            )


def _data(op: SamplingOperator, y) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.size != op.m:
        raise ParameterError(f"data has length {y.size}, operator has {op.m} rows")
    if not np.all(np.isfinite(y)):
        raise ParameterError("data must be finite")
    return y


def _zero_report(op, method, **extra) -> SolveReport:
    return SolveReport(SparseSeq(), np.zeros(op.m), 0.0, infimum_dual=0.0,
                       interp_residual=0.0, method=method, **extra)


def _spd_gram(op: SamplingOperator) -> np.ndarray:
    g = gram_matrix(op)
    lo = float(np.linalg.eigvalsh(g)[0])
    if lo <= GRAM_EIG_TOL:
        raise DegenerateOperatorError(
            f"Gram matrix is not positive definite (smallest eigenvalue {lo:.3e})"
        )
    return g


def solve_mni_hilbert(op: SamplingOperator, y) -> SolveReport:
    """Hilbert-space interpolant: ``c = G^{-1} y`` and ``x = L^* c``."""
    y = _data(op, y)
    g = _spd_gram(op)
    if not np.any(y):
        return _zero_report(op, "hilbert_gram")
    c = np.linalg.solve(g, y)
    xd = c @ op.matrix
    sol = op.extend(xd)
    obj = float(np.linalg.norm(xd))
    return SolveReport(
        solution=sol,
        coefs=c,
        objective=obj,
        infimum_dual=math.sqrt(max(float(c @ g @ c), 0.0)),
        interp_residual=float(np.abs(op.matrix @ xd - y).max()),
        method="hilbert_gram",
    )


def _fd_jacobian(func, c, f):
    jac = np.empty((f.size, c.size))
    for j in range(c.size):
        h = 1e-6 * (1.0 + abs(c[j]))
        cp = c.copy()
        cp[j] += h
        jac[:, j] = (func(cp) - f) / h
    return jac


def newton_solve(func, c0, tol: float, max_iter: int, potential=None, jacobian=None):
    """Damped Newton on ``func(c) = 0`` with a forward-difference Jacobian.

    The difference step for coordinate j is ``1e-6 * (1 + |c_j|)``. Each
    step is halved (at most 60 times) until the merit decreases. The merit
    is ``potential`` when given (a function whose gradient is ``func``),
    otherwise ``||func||_2``. Near the solution, where the potential can
    no longer resolve a decrease in floating point, a step that keeps the
    potential level and lowers ``||func||_2`` is accepted too.

    When the line search fails with the difference Jacobian and an exact
    ``jacobian(c)`` is supplied, the step is retried with it. This matters
    where ``func`` has a steep cusp closer than the difference step.

    Returns ``(c, residual_inf, iterations)``; raises
    :class:`NonConvergenceError` when the line search stalls, when the
    residual fails to halve over 100 consecutive iterations, or when
    ``max_iter`` is exhausted.
    """
    c = np.array(c0, dtype=np.float64)
    f = func(c)
    res = float(np.abs(f).max())
    merit = float(np.linalg.norm(f))
    pot = potential(c) if potential is not None else 0.0
    progress = _Progress()
    it = 0
    while res > tol:
        if it >= max_iter:
            raise NonConvergenceError(f"Newton did not converge in {max_iter} iterations", res)
        progress.update(res)
        it += 1
        builders = [lambda: _fd_jacobian(func, c, f)]
        if jacobian is not None:
            builders.append(lambda: jacobian(c))
        for build in builders:
            jac = build()
            try:
                step = np.linalg.solve(jac, -f)
            except np.linalg.LinAlgError:
                step = np.linalg.lstsq(jac, -f, rcond=None)[0]
            accepted = _line_search(func, c, step, merit, pot, potential)
            if accepted is not None:
                break
        else:
            raise NonConvergenceError("Newton line search stalled", res)
        c, f, merit, pot = accepted
        res = float(np.abs(f).max())
    return c, res, it


def _line_search(func, c, step, merit, pot, potential):
    t = 1.0
    for _ in range(_NEWTON_HALVINGS):
        cand = c + t * step
        fc = func(cand)
        mc = float(np.linalg.norm(fc))
        if potential is None:
            if mc < merit:
                return cand, fc, mc, 0.0
        else:
            pc = potential(cand)
            level = 1e-14 * (1.0 + abs(pot))
            if pc < pot - level or (pc <= pot + level and mc < merit):
                return cand, fc, mc, pc
        t *= 0.5
    return None


def _dmap_derivative(u: np.ndarray, q: float):
    """Derivative of the duality map at ``u`` and the gradient of ``||u||_q``.

    With ``w = u / ||u||_q`` and ``v = sign(w)|w|^(q-1)`` (the gradient of
    the norm), the derivative is ``(q-1) diag(|w|^(q-2)) + (2-q) v v^T``.
    For ``q < 2`` the diagonal blows up at zero entries; those are floored
    at ``1e-12 * max|w|``.
    """
    nu = pnorm(u, q)
    w = u / nu
    aw = np.abs(w)
    v = np.sign(w) * aw ** (q - 1.0)
    if q < 2.0:
        aw = np.maximum(aw, 1e-12 * aw.max())
    return (q - 1.0) * np.diag(aw ** (q - 2.0)) + (2.0 - q) * np.outer(v, v), v


def primal_newton(value, grad, hess, x0, certify, tol: float, max_iter: int, eq=None):
    """Newton with Armijo backtracking on a smooth objective, optionally
    subject to ``eq @ x = eq @ x0``.

    ``certify(x, grad, mult)`` maps the current point, its gradient and the
    multiplier of the Newton-KKT system (``None`` without constraints) to
    ``(c, residual)``; the loop ends once ``residual <= tol``. A direction
    that fails to descend (possible for nonconvex objectives) is replaced
    by the projected negative gradient. Returns ``(x, c, residual,
    iterations)``.
    """
    x = np.array(x0, dtype=np.float64)
    n = x.size
    f = value(x)
    progress = _Progress()
    for it in range(max_iter + 1):
        gx = grad(x)
        h = hess(x)
        h = h + 1e-14 * max(1.0, float(np.trace(h)) / max(n, 1)) * np.eye(n)
        dx, mult = _newton_direction(h, gx, eq)
        c, res = certify(x, gx, mult)
        if res <= tol:
            return x, c, res, it
        if it == max_iter:
            break
        progress.update(res)
        slope = float(gx @ dx)
        if not slope < 0.0:
            dx, _ = _newton_direction(np.eye(n), gx, eq)
            slope = float(gx @ dx)
        if -slope <= 1e-12 * (1.0 + abs(f)):
            # the predicted decrease is below what f can resolve in floating
            # point; inside this region the full Newton step is taken
            x = x + dx
            f = value(x)
            continue
        t = 1.0
        for _ in range(_NEWTON_HALVINGS):
            xn = x + t * dx
            fn = value(xn)
            if fn <= f + 1e-4 * t * slope:
                break
            t *= 0.5
        else:
            raise NonConvergenceError("Newton line search stalled", progress.best)
        x, f = xn, fn
    raise NonConvergenceError(f"Newton did not converge in {max_iter} iterations", progress.best)


def _newton_direction(h, gx, eq):
    if eq is None:
        try:
            return np.linalg.solve(h, -gx), None
        except np.linalg.LinAlgError:
            return np.linalg.lstsq(h, -gx, rcond=None)[0], None
    n, m = gx.size, eq.shape[0]
    kkt = np.zeros((n + m, n + m))
    kkt[:n, :n] = h
    kkt[:n, n:] = eq.T
    kkt[n:, :n] = eq
    rhs = np.concatenate([-gx, np.zeros(m)])
    try:
        sol = np.linalg.solve(kkt, rhs)
    except np.linalg.LinAlgError:
        sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
    return sol[:n], sol[n:]


def _dmap_dense(u: np.ndarray, q: float) -> np.ndarray:
    nu = pnorm(u, q)
    if nu == 0.0:
        return np.zeros_like(u)
    w = u / nu
    return nu * np.sign(w) * np.abs(w) ** (q - 1.0)


def solve_mni_lp_space(op: SamplingOperator, y, p: float,
                       cfg: IterationConfig | None = None) -> SolveReport:
    """lp interpolant, 1 < p < inf, through the coefficient equations.

    The certified equation is ``F(c) = L(dmap_lq(L^* c, q)) - y = 0`` and
    the interpolant is ``dmap_lq(L^* c, q)``. For ``p <= 2`` damped Newton
    runs on ``F`` directly, started from the Hilbert coefficients. For
    ``p > 2`` the map ``c -> F(c)`` has an infinitely steep cusp wherever
    an entry of ``L^* c`` vanishes and Newton on it oscillates, so Newton
    runs instead on ``min ||x||_p^2 / 2`` subject to ``L x = y`` (smooth
    for ``p > 2``). There ``c`` is the least-squares solution of
    ``L^* c = J_p(x)`` (``J_p`` the duality map of lp, inverse to
    ``dmap_lq``), the interpolant is ``x`` itself and the stopping test is
    ``max(||L x - y||_inf, ||J_p(x) - L^* c||_inf) <= tol``. Evaluating
    ``F(c)`` would push rounding errors in ``c`` through the cusp, so it is
    only reported, as ``residuals["F"]``.
    """
    space = Space("lp", float(p))
    cfg = cfg or IterationConfig()
    y = _data(op, y)
    q = space.q
    g = _spd_gram(op)
    if not np.any(y):
        return _zero_report(op, f"lp_newton(p={space.p:g})")
    a = op.matrix

    def residual(c):
        return a @ _dmap_dense(c @ a, q) - y

    # F is the gradient of the convex function c -> ||L^* c||_q^2 / 2 - <c, y>
    def potential(c):
        return 0.5 * pnorm(c @ a, q) ** 2 - float(c @ y)

    def jacobian(c):
        return a @ _dmap_derivative(c @ a, q)[0] @ a.T

    c0 = np.linalg.solve(g, y)
    method = f"lp_newton(p={space.p:g})"
    if space.p <= 2.0:
        c, res, it = newton_solve(residual, c0, cfg.tol, cfg.max_iter, potential, jacobian)
        nu = op.extend(c @ a)
        sol = dmap_lq(nu, q)
        residuals = {"F": res}
    else:
        def certify(x, gx, mult):
            c = np.linalg.lstsq(a.T, gx, rcond=None)[0]
            stat = float(np.abs(gx - c @ a).max())
            feas = float(np.abs(a @ x - y).max())
            return c, max(stat, feas)

        x, c, res, it = primal_newton(
            lambda x: 0.5 * pnorm(x, space.p) ** 2,
            lambda x: _dmap_dense(x, space.p),
            lambda x: _dmap_derivative(x, space.p)[0],
            c0 @ a, certify, cfg.tol, cfg.max_iter, eq=a,
        )
        nu = op.extend(c @ a)
        sol = op.extend(x)
        residuals = {"kkt": res, "F": float(np.abs(residual(c)).max())}
        method = f"lp_primal_newton(p={space.p:g})"
    xd = op.restrict(sol)
    return SolveReport(
        solution=sol,
        coefs=c,
        objective=pnorm(xd, space.p),
        infimum_dual=pnorm(nu.values, q),
        interp_residual=float(np.abs(a @ xd - y).max()),
        iterations=it,
        residuals=residuals,
        method=method,
    )


def _whitening(a: np.ndarray):
    """``W = (A A^T)^{-1/2}`` and ``||W^{-1}||_inf``, or ``None`` when rank deficient."""
    w, v = np.linalg.eigh(a @ a.T)
    if w[0] <= GRAM_EIG_TOL * max(w[-1], 1.0):
        return None
    white = (v / np.sqrt(w)) @ v.T
    unwhite = (v * np.sqrt(w)) @ v.T
    return white, float(np.abs(unwhite).sum(axis=1).max())


def solve_mni_l1(op: SamplingOperator, y, cfg: IterationConfig | None = None,
                 precondition: bool = True) -> SolveReport:
    """l1 interpolant by an extrapolated primal-dual proximal iteration.

    With ``precondition`` (default) the constraints ``L x = y`` are
    replaced by the equivalent ``W L x = W y`` with ``W = (L L^*)^{-1/2}``,
    whose rows are orthonormal; this leaves the solution set unchanged and
    removes the dependence of the convergence rate on the conditioning of
    the rows. The dual variable is mapped back by ``c = W c_w``, so the
    reported pair satisfies the fixed-point equations of the original
    operator. Step sizes from ``cfg`` refer to whichever operator is
    iterated on.
    """
    cfg = cfg or IterationConfig()
    y = _data(op, y)
    if not np.any(y):
        return _zero_report(op, "l1_primal_dual", fixed_point_residual=0.0,
                            residuals={"interp": 0.0, "prox": 0.0})
    a = np.ascontiguousarray(op.matrix)
    at = np.ascontiguousarray(a.T)
    white = _whitening(a) if precondition else None
    if white is not None:
        w, scale = white
        a_it = np.ascontiguousarray(w @ a)
        y_it = w @ y
        tol_it = cfg.tol / scale
        opnorm = 1.0
    else:
        a_it, y_it, tol_it = a, y, cfg.tol
        opnorm = op.spectral_norm
    tau, sigma = cfg.primal_dual_steps(opnorm)
    x, c, it, _, _, _ = kernels.pdhg_mni_l1(
        a_it, np.ascontiguousarray(a_it.T), y_it, np.zeros(op.n), np.zeros(op.m),
        float(tau), float(sigma), float(cfg.relaxation), int(cfg.max_iter), float(tol_it),
        MAX_INDEX_RTOL, int(cfg.check_every),
    )
    if white is not None:
        c = white[0] @ c
    r1, r2 = kernels.mni_l1_residuals(a, at, y, x, c, MAX_INDEX_RTOL)
    nu = c @ a
    top = float(np.abs(nu).max()) if nu.size else 0.0
    cy = float(c @ y)
    return SolveReport(
        solution=op.extend(x),
        coefs=c,
        objective=float(np.abs(x).sum()),
        infimum_dual=abs(cy) / top if top > 0 else math.nan,
        interp_residual=float(r1),
        fixed_point_residual=float(max(r1, r2)),
        iterations=int(it),
        converged=bool(r1 <= cfg.tol and r2 <= cfg.tol),
        method="l1_primal_dual" + ("_whitened" if white is not None else ""),
        residuals={"interp": float(r1), "prox": float(r2)},
    )


def fixed_point_residual_l1(op: SamplingOperator, y, x: SparseSeq, c,
                            rtol: float = MAX_INDEX_RTOL) -> tuple[float, float]:
    """Residuals of the truncated l1 fixed-point equations at ``(x, c)``.

    ``r_interp = ||(c + L x - y) - c||_inf`` and
    ``r_prox = ||x - soft(x - S(L^* c), 1)||_1``, where ``S`` keeps the
    entries of ``L^* c`` attaining its sup-norm. Entries of ``x`` outside
    the row support count fully toward ``r_prox``, since ``L^* c``
    vanishes there.
    """
    y = _data(op, y)
    c = np.asarray(c, dtype=np.float64).ravel()
    if c.size != op.m:
        raise ParameterError(f"coefficient vector has length {c.size}, expected {op.m}")
    a = np.ascontiguousarray(op.matrix)
    xd = np.ascontiguousarray(op.restrict(x))
    r1 = float(np.abs(prox_indicator_conj(c + a @ xd, y) - c).max())
    _, r2 = kernels.mni_l1_residuals(a, np.ascontiguousarray(a.T), y, xd, c, rtol)
    # an entry x_j off the row support is mapped to soft(x_j, 1), leaving min(|x_j|, 1)
    outside = float(np.minimum(np.abs(x.values[~np.isin(x.indices, op.support)]), 1.0).sum())
    return r1, float(r2) + outside


def infimum_report(op: SamplingOperator, coefs, space: Space) -> float:
    """Optimal value read off the coefficients alone.

    ``hilbert``: ``sqrt(c^T G c)``; ``lp``: ``||L^* c||_q``; ``l1``: the
    reciprocal ``1 / ||L^* c_hat||_inf`` for coefficients normalized by
    ``<c_hat, y> = 1``.
    """
    c = np.asarray(coefs, dtype=np.float64).ravel()
    if c.size != op.m:
        raise ParameterError(f"coefficient vector has length {c.size}, expected {op.m}")
    nu = c @ op.matrix
    if space.kind == "hilbert":
        return float(np.linalg.norm(nu))
    if space.kind == "lp":
        return pnorm(nu, space.q)
    if space.kind == "l1":
        top = float(np.abs(nu).max()) if nu.size else 0.0
        if top == 0.0:
            raise DegenerateInputError("L^* c_hat is the zero functional")
        return 1.0 / top
    raise ParameterError(f"no interpolation problem posed in {space}")


def solve_mni(op: SamplingOperator, y, space: Space, cfg: IterationConfig | None = None) -> SolveReport:
    """Dispatch on the space kind."""
    if space.kind == "hilbert":
        return solve_mni_hilbert(op, y)
    if space.kind == "lp":
        return solve_mni_lp_space(op, y, space.p, cfg)
    if space.kind == "l1":
        return solve_mni_l1(op, y, cfg)
    raise ParameterError(f"no interpolation problem posed in {space}")
