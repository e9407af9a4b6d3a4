"""Linear-programming reference route for l1 minimum-norm interpolation.

A dense two-phase simplex (Bland's rule) solves

* basis pursuit: ``min ||x||_1  s.t.  L x = y`` with ``x = x+ - x-``;
* the coefficient problem ``min ||L^* c||_inf  s.t.  <c, y> = 1``;
* the face feasibility problem that turns an optimal coefficient vector
  back into an interpolant.

Only the union support of the rows enters any LP: a coordinate outside
it does not change ``L x`` and can only add to ``||x||_1``, so every
minimizer vanishes there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .duality import MAX_INDEX_RTOL, max_index_mask
from .exceptions import (
    DegenerateInputError,
    DegenerateOperatorError,
    InfeasibleError,
    NumericalDualityError,
    ParameterError,
)
from .report import SolveReport
from .sampling import SamplingOperator
from .sequence import SparseSeq

__all__ = [
    "StandardLP",
    "LPResult",
    "simplex_solve",
    "basis_pursuit",
    "dual_inf_norm_lp",
    "reconstruct_from_dual",
    "PIVOT_TOL",
]

PIVOT_TOL = 1e-9
FEASIBILITY_TOL = 1e-9


@dataclass(frozen=True)
class StandardLP:
    """``min cost @ x  s.t.  eq_matrix @ x = eq_rhs,  x >= 0``."""

    cost: np.ndarray
    eq_matrix: np.ndarray
    eq_rhs: np.ndarray

    def __post_init__(self):
        cost = np.asarray(self.cost, dtype=np.float64).ravel()
        a = np.atleast_2d(np.asarray(self.eq_matrix, dtype=np.float64))
        b = np.asarray(self.eq_rhs, dtype=np.float64).ravel()
        if a.shape != (b.size, cost.size):
            raise ParameterError(
                f"inconsistent LP dimensions: matrix {a.shape}, rhs {b.size}, cost {cost.size}"
            )
        if not (np.all(np.isfinite(cost)) and np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ParameterError("LP data must be finite")
        object.__setattr__(self, "cost", cost)
        object.__setattr__(self, "eq_matrix", a)
        object.__setattr__(self, "eq_rhs", b)


@dataclass
class LPResult:
    status: str
    value: float = math.nan
    x: np.ndarray | None = None
    duals: np.ndarray | None = None
    basis: tuple = ()
    pivots: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def simplex_solve(lp: StandardLP, tol: float = PIVOT_TOL, feas_tol: float = FEASIBILITY_TOL,
                  max_pivots: int = 100_000) -> LPResult:
    """Two-phase dense tableau simplex with Bland's anti-cycling rule.

    Returns an :class:`LPResult` whose ``status`` is ``"optimal"``,
    ``"infeasible"`` or ``"unbounded"``. At an optimum the basic variables
    are recomputed from the original data, and ``duals`` holds the
    simplex multipliers (``A^T duals <= cost`` with equality on the basis).
    """
    a, b, cost = lp.eq_matrix.copy(), lp.eq_rhs.copy(), lp.cost
    r, n = a.shape
    flip = b < 0
    a[flip] *= -1.0
    b[flip] *= -1.0

    if r == 0:
        if np.any(cost < -tol):
            return LPResult("unbounded")
        return LPResult("optimal", 0.0, np.zeros(n), np.zeros(0))

    # phase 1: artificial basis
    full = np.hstack([a, np.eye(r)])
    cost1 = np.concatenate([np.zeros(n), np.ones(r)])
    basis = np.arange(n, n + r, dtype=np.int64)
    rows = np.arange(r)
    t, basis, pivots = _run_phase(full, b, cost1, basis, rows, n + r, tol, max_pivots)
    if -t[-1, -1] > feas_tol * (1.0 + float(np.abs(b).max())):
        return LPResult("infeasible", pivots=int(pivots))

    # drive remaining artificials out of the basis, dropping redundant rows
    keep = np.ones(r, dtype=bool)
    for i in range(r):
        if basis[i] >= n:
            row = np.abs(t[i, :n])
            j = int(np.argmax(row))
            if row[j] > tol:
                kernels.simplex_pivot(t, i, j)
                basis[i] = j
                pivots += 1
            else:
                keep[i] = False

    rows = np.flatnonzero(keep)
    basis2 = basis[rows].copy()
    try:
        t2, basis2, p2 = _run_phase(a, b, cost, basis2, rows, n, tol, max_pivots)
    except _Unbounded as exc:
        return LPResult("unbounded", pivots=int(pivots + exc.pivots))
    pivots += p2

    x = np.zeros(n)
    duals = np.zeros(r)
    bmat = a[np.ix_(rows, basis2)]
    try:
        xb = np.linalg.solve(bmat, b[rows])
        pi = np.linalg.solve(bmat.T, cost[basis2])
    except np.linalg.LinAlgError:
        xb = t2[:-1, -1].copy()
        pi = np.linalg.lstsq(bmat.T, cost[basis2], rcond=None)[0]
    if xb.min() < -feas_tol:
        xb = t2[:-1, -1].copy()
    x[basis2] = np.maximum(xb, 0.0)
    duals[rows] = pi
    duals[flip] *= -1.0
    return LPResult("optimal", float(cost @ x), x, duals, tuple(int(j) for j in basis2), int(pivots))


class _Unbounded(Exception):
    def __init__(self, pivots):
        self.pivots = pivots


def _tableau(full, b, cost, basis, rows):
    """Canonical tableau for ``basis``, rebuilt from the original data."""
    m_sub = full[rows]
    binv = np.linalg.inv(m_sub[:, basis])
    t = np.empty((rows.size + 1, full.shape[1] + 1))
    t[:-1, :-1] = binv @ m_sub
    t[:-1, -1] = binv @ b[rows]
    t[-1, :-1] = cost - cost[basis] @ t[:-1, :-1]
    t[-1, -1] = -cost[basis] @ t[:-1, -1]
    return t


def _run_phase(full, b, cost, basis, rows, n_enter, tol, max_pivots, chunk=64):
    """Bland simplex with periodic refactorization against accumulated drift.

    Every ``chunk`` pivots, and again on apparent optimality, the tableau
    is rebuilt from the original data; the phase ends only when a freshly
    rebuilt tableau admits no entering column.
    """
    basis = basis.copy()
    total = 0
    while True:
        t = _tableau(full, b, cost, basis, rows)
        status, pivots = kernels.simplex_iterate(t, basis, n_enter, tol, chunk)
        total += pivots
        if status == kernels.LP_UNBOUNDED:
            raise _Unbounded(total)
        if status == kernels.LP_OPTIMAL and pivots == 0:
            return t, basis, total
        if total >= max_pivots:
            raise RuntimeError("simplex pivot limit reached")


def _check_data(op: SamplingOperator, y) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.size != op.m:
        raise ParameterError(f"data has length {y.size}, operator has {op.m} rows")
    return y


def basis_pursuit(op: SamplingOperator, y) -> SolveReport:
    """Minimum l1-norm interpolant by linear programming.

    ``coefs`` is the multiplier ``c`` of the fixed-point formulation, i.e.
    minus the LP dual vector, so that ``-L^* c`` is a subgradient of the
    l1 norm at the solution.
    """
    y = _check_data(op, y)
    if not np.any(y):
        return SolveReport(SparseSeq(), np.zeros(op.m), 0.0, infimum_dual=0.0,
                           interp_residual=0.0, method="basis_pursuit_lp")
    u = op.matrix
    n = op.n
    res = simplex_solve(StandardLP(np.ones(2 * n), np.hstack([u, -u]), y))
    if res.status == "infeasible":
        raise InfeasibleError("interpolation constraints are inconsistent")
    if res.status != "optimal":
        raise RuntimeError(f"basis pursuit LP ended with status {res.status}")
    xd = res.x[:n] - res.x[n:]
    sol = op.extend(xd)
    return SolveReport(
        solution=sol,
        coefs=-res.duals,
        objective=float(np.abs(xd).sum()),
        infimum_dual=float(y @ res.duals),
        interp_residual=float(np.abs(u @ xd - y).max()),
        iterations=res.pivots,
        method="basis_pursuit_lp",
    )


def dual_inf_norm_lp(op: SamplingOperator, y) -> tuple[np.ndarray, float]:
    """Solve ``min ||L^* c||_inf  s.t.  <c, y> = 1``; returns ``(c_hat, value)``.

    The infimum of the l1 interpolation problem is ``1 / value``.
    """
    y = _check_data(op, y)
    if not np.any(y):
        raise DegenerateInputError("the coefficient problem needs nonzero data")
    u = op.matrix
    m, n = u.shape
    # columns: c+ (m), c- (m), t, slack+ (n), slack- (n)
    a = np.zeros((2 * n + 1, 2 * m + 1 + 2 * n))
    a[:n, :m] = u.T
    a[:n, m:2 * m] = -u.T
    a[:n, 2 * m] = -1.0
    a[:n, 2 * m + 1:2 * m + 1 + n] = np.eye(n)
    a[n:2 * n, :m] = -u.T
    a[n:2 * n, m:2 * m] = u.T
    a[n:2 * n, 2 * m] = -1.0
    a[n:2 * n, 2 * m + 1 + n:] = np.eye(n)
    a[2 * n, :m] = y
    a[2 * n, m:2 * m] = -y
    rhs = np.zeros(2 * n + 1)
    rhs[-1] = 1.0
    cost = np.zeros(a.shape[1])
    cost[2 * m] = 1.0
    res = simplex_solve(StandardLP(cost, a, rhs))
    if res.status != "optimal":
        raise DegenerateOperatorError(f"coefficient LP ended with status {res.status}")
    c_hat = res.x[:m] - res.x[m:2 * m]
    value = float(np.abs(c_hat @ u).max()) if n else 0.0
    if value <= 0.0:
        raise DegenerateOperatorError("data lies outside the span of the sampling functionals")
    return c_hat, value


def reconstruct_from_dual(op: SamplingOperator, y, c_hat, rtol=MAX_INDEX_RTOL) -> SparseSeq:
    """Interpolant from an optimal coefficient vector.

    With ``nu = L^* c_hat``, finds convex weights ``t`` on the signed unit
    vectors of the maximal entries of ``nu`` such that ``g = sum t_j s_j e_j``
    satisfies ``L g = ||nu||_inf y``, then returns ``g / ||nu||_inf``. When
    several ``g`` exist, the first basic feasible one is returned.
    """
    y = _check_data(op, y)
    c_hat = np.asarray(c_hat, dtype=np.float64).ravel()
    if c_hat.size != op.m:
        raise ParameterError("coefficient vector length does not match the operator")
    if not np.any(y):
        return SparseSeq()
    nu = c_hat @ op.matrix
    top = float(np.abs(nu).max()) if nu.size else 0.0
    if top == 0.0:
        raise DegenerateInputError("L^* c_hat is the zero functional")
    face = np.flatnonzero(max_index_mask(nu, rtol))
    signs = np.sign(nu[face])
    cols = op.matrix[:, face] * signs
    a = np.vstack([cols, np.ones((1, face.size))])
    rhs = np.concatenate([top * y, [1.0]])
    res = simplex_solve(StandardLP(np.zeros(face.size), a, rhs))
    if res.status != "optimal":
        raise NumericalDualityError(
            "no convex combination of the extremal vertices interpolates the data; "
            "the coefficient vector is not optimal to tolerance"
        )
    xs = res.x * signs / top
    return SparseSeq.from_arrays(op.support[face], xs)
