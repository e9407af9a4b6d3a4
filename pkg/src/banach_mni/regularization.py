"""Regularized fitting: minimize ``Q_y(L x) + lam * phi(||x||)``.

Solvers by space:

* Hilbert, square loss, ``phi = t^2``: the ridge system ``(G + lam I) c = y``.
* Hilbert, any loss with a closed-form prox, ``phi = t^2``: accelerated
  forward-backward on ``d = -2 lam c`` for ``min Q^*(d) + d^T G d / (4 lam)``,
  whose unit-step fixed point is ``c = -prox_{Q^*}(-2 lam c + G c) / (2 lam)``.
* lp, square loss, any differentiable increasing ``phi``: damped Newton on
  ``grad Q(G_sip(c)) + lam phi'(s) / s * c = 0`` with
  ``G_sip(c) = L(dmap_lq(L^* c))`` and ``s = ||L^* c||_q``.
* l1 with ``phi = t``: FISTA for the square loss, primal-dual iteration
  for hinge and epsilon-insensitive losses. Solutions are certified by
  the truncated fixed-point residuals of :func:`reg_fixed_point_residual_l1`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .duality import MAX_INDEX_RTOL, dmap_lq
from .exceptions import NonConvergenceError, ParameterError
from .mni import _dmap_dense, _dmap_derivative, _spd_gram, newton_solve, primal_newton, solve_mni
from .prox import LossSpec
from .report import CheckReport, IterationConfig, SolveReport
from .sampling import SamplingOperator, gram_matrix
from .sequence import Space, SparseSeq, norm, pnorm

__all__ = [
    "Regularizer",
    "RegProblem",
    "solve_reg",
    "solve_reg_hilbert_square",
    "solve_reg_hilbert_prox",
    "solve_reg_lp_space",
    "solve_reg_l1",
    "reg_fixed_point_residual_l1",
    "reg_objective",
    "check_mni_reg_link",
]


@dataclass(frozen=True)
class Regularizer:
    """``phi(t) = t ** r`` on ``t >= 0``; ``r = 1`` is the identity, ``r = 2`` the square."""

    r: float = 2.0

    def __post_init__(self):
        if not (math.isfinite(self.r) and self.r > 0):
            raise ParameterError(f"regularizer exponent must be positive, got {self.r}")

    @classmethod
    def identity(cls):
        return cls(1.0)

    @classmethod
    def square(cls):
        return cls(2.0)

    @property
    def name(self) -> str:
        return {1.0: "identity", 2.0: "square"}.get(float(self.r), "power")

    def __call__(self, t: float) -> float:
        return float(t) ** self.r

    def derivative(self, t: float) -> float:
        if t == 0.0:
            if self.r > 1.0:
                return 0.0
            return 1.0 if self.r == 1.0 else math.inf
        return self.r * float(t) ** (self.r - 1.0)

    def to_json(self) -> dict:
        if self.name == "power":
            return {"kind": "power", "r": self.r}
        return {"kind": self.name}


@dataclass(frozen=True)
class RegProblem:
    op: SamplingOperator
    space: Space
    loss: LossSpec
    lam: float
    regularizer: Regularizer = Regularizer()

    def __post_init__(self):
        if not (math.isfinite(self.lam) and self.lam > 0):
            raise ParameterError(f"lambda must be positive, got {self.lam}")
        if self.loss.y.size != self.op.m:
            raise ParameterError(
                f"loss data has length {self.loss.y.size}, operator has {self.op.m} rows"
            )
        if self.space.kind == "linf":
            raise ParameterError("no regularization problem is posed in linf")

    @property
    def y(self) -> np.ndarray:
        return self.loss.y


def reg_objective(problem: RegProblem, x: SparseSeq) -> float:
    """``Q_y(L x) + lam * phi(||x||)`` in the problem's space."""
    z = problem.op.matrix @ problem.op.restrict(x)
    return problem.loss.value(z) + problem.lam * problem.regularizer(norm(x, problem.space))


def _report(problem, sol, coefs, method, **kw) -> SolveReport:
    z = problem.op.matrix @ problem.op.restrict(sol)
    return SolveReport(
        solution=sol,
        coefs=np.asarray(coefs, dtype=np.float64),
        objective=reg_objective(problem, sol),
        interp_residual=float(np.abs(z - problem.y).max()),
        method=method,
        **kw,
    )


def solve_reg_hilbert_square(op: SamplingOperator, y, lam: float) -> SolveReport:
    """Ridge in l2: ``(G + lam I) c = y``, ``x = L^* c``."""
    problem = RegProblem(op, Space("hilbert"), LossSpec("square", y), lam, Regularizer.square())
    g = gram_matrix(op)
    c = np.linalg.solve(g + problem.lam * np.eye(op.m), problem.y)
    return _report(problem, op.extend(c @ op.matrix), c, "hilbert_ridge")


def solve_reg_hilbert_prox(op: SamplingOperator, problem: RegProblem,
                           cfg: IterationConfig | None = None) -> SolveReport:
    """Hilbert-space coefficients from the prox fixed point ``c = -prox_{Q*}(-2 lam c + G c) / (2 lam)``.

    Iterated as accelerated forward-backward (step ``0.95 * 2 lam / ||G||``)
    on ``d = -2 lam c``; stops once the unit-step fixed-point residual is
    below ``cfg.tol``.
    """
    cfg = cfg or IterationConfig()
    if problem.space.kind != "hilbert" or problem.regularizer.r != 2.0:
        raise ParameterError("the prox route needs the Hilbert space and phi(t) = t^2")
    if problem.op is not op:
        raise ParameterError("problem was posed on a different operator")
    g = np.ascontiguousarray(gram_matrix(op))
    lam = problem.lam
    gnorm = float(np.linalg.eigvalsh(g)[-1])
    step = 0.95 * 2.0 * lam / gnorm if gnorm > 0 else 1.0
    c, it, res, conv = kernels.fista_hilbert_dual(
        g, np.ascontiguousarray(problem.y), problem.loss.code, problem.loss.eps, lam,
        np.zeros(op.m), step, int(cfg.max_iter), float(cfg.tol), int(cfg.check_every),
    )
    return _report(problem, op.extend(c @ op.matrix), c, "hilbert_prox_fixed_point",
                   fixed_point_residual=float(res), iterations=int(it), converged=bool(conv),
                   residuals={"fixed_point": float(res)})


def solve_reg_lp_space(op: SamplingOperator, problem: RegProblem,
                       cfg: IterationConfig | None = None) -> SolveReport:
    """Coefficients from the nonlinear system for a square loss in lp (or l2).

    Newton starts from the ridge coefficients. The zero solution is
    returned when it is optimal (``lam * phi'(0) >= ||L^* grad Q(0)||_q`` for
    ``r >= 1``) or when the stationary point found is no better than zero, which can
    only happen for the nonconvex exponents ``r < 1``.
    """
    cfg = cfg or IterationConfig()
    if problem.space.kind not in ("lp", "hilbert"):
        raise ParameterError("the nonlinear-system route needs an lp or Hilbert space")
    if not problem.loss.differentiable:
        raise ParameterError(f"the nonlinear-system route needs a differentiable loss, got {problem.loss.kind}")
    if problem.op is not op:
        raise ParameterError("problem was posed on a different operator")
    q = problem.space.q
    p = problem.space.exponent
    a = op.matrix
    y = problem.y
    lam = problem.lam
    phi = problem.regularizer
    g = _spd_gram(op)
    method = f"lp_newton(p={p:g})"
    zero = _report(problem, SparseSeq(), np.zeros(op.m), method, fixed_point_residual=0.0)
    grad0 = pnorm(problem.loss.gradient(np.zeros(op.m)) @ a, q)
    # for r < 1 zero is always a local minimizer, so only the comparison below decides
    if grad0 == 0.0 or (phi.r >= 1.0 and lam * phi.derivative(0.0) >= grad0):
        return zero

    def system(c):
        u = c @ a
        s = pnorm(u, q)
        if s == 0.0:
            return np.full(op.m, np.inf)
        return problem.loss.gradient(a @ _dmap_dense(u, q)) + lam * phi.derivative(s) / s * c

    def jacobian(c):
        u = c @ a
        s = pnorm(u, q)
        d, v = _dmap_derivative(u, q)
        grad_s = a @ v
        dphi = phi.derivative(s)
        ddphi = phi.r * (phi.r - 1.0) * s ** (phi.r - 2.0)
        return (2.0 * (a @ d @ a.T) + lam * (dphi / s) * np.eye(op.m)
                + lam * (ddphi * s - dphi) / s**2 * np.outer(c, grad_s))

    c0 = np.linalg.solve(g + lam * np.eye(op.m), y)
    if p <= 2.0:
        c, res, it = newton_solve(system, c0, cfg.tol, cfg.max_iter, jacobian=jacobian)
    else:
        # same cusp issue as in interpolation: iterate on x, read c off the gradient
        def value(x):
            return problem.loss.value(a @ x) + lam * phi(pnorm(x, p))

        def grad(x):
            s = pnorm(x, p)
            return (a.T @ problem.loss.gradient(a @ x)
                    + (lam * phi.derivative(s) / s * _dmap_dense(x, p) if s > 0 else 0.0))

        def hess(x):
            s = pnorm(x, p)
            h = 2.0 * (a.T @ a)
            if s > 0:
                jx = _dmap_dense(x, p)
                dphi = phi.derivative(s)
                ddphi = phi.r * (phi.r - 1.0) * s ** (phi.r - 2.0)
                h = h + lam * (dphi / s * _dmap_derivative(x, p)[0]
                               + (ddphi * s - dphi) / s**3 * np.outer(jx, jx))
            return h

        def certify(x, gx, mult):
            s = pnorm(x, p)
            if s == 0.0:
                return np.zeros(op.m), math.inf
            c = -s / (lam * phi.derivative(s)) * problem.loss.gradient(a @ x)
            return c, float(np.abs(c @ a - _dmap_dense(x, p)).max())

        x, c, res, it = primal_newton(value, grad, hess, c0 @ a, certify, cfg.tol, cfg.max_iter)
        rep = _report(problem, op.extend(x), c, f"lp_primal_newton(p={p:g})",
                      fixed_point_residual=res, iterations=it,
                      residuals={"stationarity": res, "system": float(np.abs(system(c)).max())})
        return zero if rep.objective > zero.objective else rep
    sol = dmap_lq(op.extend(c @ a), q)
    rep = _report(problem, sol, c, method, fixed_point_residual=res, iterations=it,
                  residuals={"system": res})
    if rep.objective > zero.objective:
        return zero
    return rep


def reg_fixed_point_residual_l1(problem: RegProblem, x: SparseSeq, c,
                                rtol: float = MAX_INDEX_RTOL) -> tuple[float, float]:
    """Residuals of the truncated fixed-point equations for ``Q_y(L x) + lam ||x||_1``.

    ``r_dual = ||c - prox_{Q*}(c + L x)||_inf`` and
    ``r_prox = ||x - soft(x - S(L^* c) / lam, 1)||_1``.
    """
    op = problem.op
    c = np.ascontiguousarray(np.asarray(c, dtype=np.float64).ravel())
    if c.size != op.m:
        raise ParameterError(f"coefficient vector has length {c.size}, expected {op.m}")
    a = np.ascontiguousarray(op.matrix)
    xd = np.ascontiguousarray(op.restrict(x))
    r1, r2 = kernels.reg_l1_residuals(a, np.ascontiguousarray(a.T), np.ascontiguousarray(problem.y),
                                      problem.loss.code, problem.loss.eps, problem.lam, xd, c, rtol)
    outside = float(np.minimum(np.abs(x.values[~np.isin(x.indices, op.support)]), 1.0).sum())
    return float(r1), float(r2) + outside


def solve_reg_l1(problem: RegProblem, cfg: IterationConfig | None = None) -> SolveReport:
    """``min Q_y(L x) + lam ||x||_1``.

    Square loss: FISTA with step ``0.95 / (2 ||L||^2)`` and adaptive
    restart; the certifying multiplier is ``c = 2 (L x - y)``. Hinge and
    epsilon-insensitive losses: primal-dual iteration whose dual step is
    the conjugate loss prox. Both residuals of
    :func:`reg_fixed_point_residual_l1` are reported.
    """
    cfg = cfg or IterationConfig()
    if problem.space.kind != "l1":
        raise ParameterError("solve_reg_l1 needs an l1 problem")
    if problem.regularizer.r != 1.0:
        raise ParameterError("the l1 solvers handle phi(t) = t only")
    op = problem.op
    a = np.ascontiguousarray(op.matrix)
    at = np.ascontiguousarray(a.T)
    y = np.ascontiguousarray(problem.y)
    opnorm = op.spectral_norm
    x0 = np.zeros(op.n)
    if problem.loss.kind == "square":
        step = 0.95 / (2.0 * opnorm**2) if opnorm > 0 else 1.0
        x, it, _, _, _ = kernels.fista_lasso(a, at, y, problem.lam, x0, step, int(cfg.max_iter),
                                             float(cfg.tol), MAX_INDEX_RTOL, int(cfg.check_every))
        c = 2.0 * (a @ x - y)
        method = "l1_fista"
    else:
        tau, sigma = cfg.primal_dual_steps(opnorm)
        x, c, it, _, _, _ = kernels.pdhg_reg_l1(
            a, at, y, problem.loss.code, problem.loss.eps, problem.lam, x0, np.zeros(op.m),
            float(tau), float(sigma), float(cfg.relaxation), int(cfg.max_iter), float(cfg.tol),
            MAX_INDEX_RTOL, int(cfg.check_every),
        )
        method = "l1_primal_dual"
    r1, r2 = kernels.reg_l1_residuals(a, at, y, problem.loss.code, problem.loss.eps, problem.lam,
                                      x, c, MAX_INDEX_RTOL)
    return _report(problem, op.extend(x), c, method, fixed_point_residual=float(max(r1, r2)),
                   iterations=int(it), converged=bool(r1 <= cfg.tol and r2 <= cfg.tol),
                   residuals={"dual": float(r1), "prox": float(r2)})


def solve_reg(problem: RegProblem, cfg: IterationConfig | None = None) -> SolveReport:
    """Pick the solver matching the space, loss and regularizer."""
    kind = problem.space.kind
    if kind == "l1":
        return solve_reg_l1(problem, cfg)
    if kind == "hilbert" and problem.regularizer.r == 2.0:
        if problem.loss.kind == "square":
            return solve_reg_hilbert_square(problem.op, problem.y, problem.lam)
        return solve_reg_hilbert_prox(problem.op, problem, cfg)
    return solve_reg_lp_space(problem.op, problem, cfg)


def check_mni_reg_link(problem: RegProblem, cfg: IterationConfig | None = None,
                       tol: float = 1e-6) -> CheckReport:
    """Re-solve interpolation at ``y := L f0`` for a regularized solution ``f0``.

    For a strictly increasing ``phi``, ``f0`` is itself a minimum-norm
    interpolant of its own samples, so the interpolant ``g`` found there
    has ``||g|| = ||f0||`` and the same regularized objective. The
    violation is the larger of the two relative gaps.
    """
    rep = solve_reg(problem, cfg)
    f0 = rep.solution
    y0 = problem.op.matrix @ problem.op.restrict(f0)
    mni = solve_mni(problem.op, y0, problem.space, cfg)
    if not (rep.converged and mni.converged):
        raise NonConvergenceError("a solver did not converge during the link check",
                                  float("nan"), rep if not rep.converged else mni)
    nf = norm(f0, problem.space)
    ng = norm(mni.solution, problem.space)
    obj_g = reg_objective(problem, mni.solution)
    violation = max(abs(ng - nf) / max(1.0, nf), abs(obj_g - rep.objective) / max(1.0, abs(rep.objective)))
    return CheckReport.from_violation(
        "mni_reg_link", violation, tol,
        f"space={problem.space}; ||f0||={nf:.17g}; ||g||={ng:.17g}; "
        f"reg objective at f0={rep.objective:.17g}, at g={obj_g:.17g}; "
        "identity: a regularized solution is a minimum-norm interpolant of its own samples",
    )
