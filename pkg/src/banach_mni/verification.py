"""Identity checks on solver output and a seeded random-instance suite.

Instance distribution (:func:`random_instance`): ``m`` uniform on 1..6,
``n`` uniform on max(3, m)..40 distinct indices drawn from ``range(10 n)``,
a standard normal ``m x n`` matrix whose entries are each kept with
probability 1/2, redrawn until it has rank ``m``, at least three nonzero
columns and rows whose largest magnitudes are strictly separated from the
runner-up (relative gap 1e-6). Data ``y`` is standard normal. The
tie-stress variant draws entries from {-2, -1, 1, 2} so that maximal
index sets with several members are common.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .duality import max_index_mask
from .exceptions import BanachMNIError, DegenerateInputError
from .lp_oracle import basis_pursuit, dual_inf_norm_lp, reconstruct_from_dual
from .mni import fixed_point_residual_l1, infimum_report, solve_mni_hilbert, solve_mni_l1, solve_mni_lp_space
from .report import CheckReport, IterationConfig
from .sampling import SamplingOperator
from .sequence import Space, SparseSeq, inner, lp, norm

__all__ = [
    "Instance",
    "random_instance",
    "make_instances",
    "check_peak_functional",
    "check_duality_infimum",
    "check_support_inclusion",
    "check_hilbert_orthogonality",
    "run_suite",
    "SUITES",
    "LP_EXPONENTS",
]

SUITES = ("l1", "hilbert", "lp")
LP_EXPONENTS = (1.5, 3.0, 4.0)

PEAK_TOL = 1e-8
DUALITY_TOL = 1e-7
ORACLE_TOL = 1e-7
CERTIFICATE_TOL = 1e-7
INTERP_TOL_HILBERT = 1e-10
ORTHOGONALITY_TOL = 1e-9
INTERP_TOL_LP = 1e-8
NORM_DUALITY_TOL = 1e-8
NULL_DIRECTIONS = 10


@dataclass(frozen=True)
class Instance:
    id: int
    op: SamplingOperator
    y: np.ndarray
    seed: int


def _separated_tops(u: np.ndarray, gap: float = 1e-6) -> bool:
    for row in np.abs(u):
        nz = np.sort(row[row > 0])[::-1]
        if nz.size >= 2 and nz[0] - nz[1] <= gap * nz[0]:
            return False
    return True


def random_instance(rng: np.random.Generator, tie_stress: bool = False) -> tuple[SamplingOperator, np.ndarray]:
    """One draw from the documented desk-scale distribution."""
    while True:
        m = int(rng.integers(1, 7))
        n = int(rng.integers(max(3, m), 41))
        if tie_stress:
            u = rng.choice(np.array([-2.0, -1.0, 1.0, 2.0]), size=(m, n))
        else:
            u = rng.standard_normal((m, n))
        u = u * (rng.random((m, n)) < 0.5)
        if np.count_nonzero(np.any(u != 0.0, axis=0)) < 3:
            continue
        if np.linalg.matrix_rank(u) < m:
            continue
        if not tie_stress and not _separated_tops(u):
            continue
        support = np.sort(rng.choice(10 * n, size=n, replace=False))
        op = SamplingOperator.from_dense(u, support)
        return op, rng.standard_normal(m)


def make_instances(count: int, seed: int = 0, tie_stress: bool = False) -> list[Instance]:
    """``count`` instances; instance ``i`` depends only on ``(seed, i)``."""
    out = []
    for i in range(count):
        child = int(np.random.SeedSequence([seed, i]).generate_state(1)[0])
        op, y = random_instance(np.random.default_rng(child), tie_stress)
        out.append(Instance(i, op, y, child))
    return out


def check_peak_functional(space: Space, op: SamplingOperator, coefs, x: SparseSeq,
                          tol: float = PEAK_TOL) -> CheckReport:
    """``|<nu, x> - ||nu||_* ||x||| <= tol`` for ``nu = L^* coefs``."""
    c = np.asarray(coefs, dtype=np.float64).ravel()
    nu = op.extend(c @ op.matrix)
    if not nu:
        raise DegenerateInputError("the functional L^* c is zero")
    gap = abs(inner(nu, x) - norm(nu, space.dual()) * norm(x, space))
    return CheckReport.from_violation(
        "peak_functional", gap, tol,
        f"space={space}; identity: <nu, x> = ||nu||_dual * ||x|| for nu = L^* c",
    )


def check_duality_infimum(space: Space, op: SamplingOperator, primal_objective: float, coefs,
                          tol: float = DUALITY_TOL) -> CheckReport:
    """Compare the primal optimum with the value read off the coefficients.

    For l1 ``coefs`` are dual coefficients normalized by ``<c_hat, y> = 1``
    and the product ``primal * ||L^* c_hat||_inf`` is compared with 1.
    """
    value = infimum_report(op, coefs, space)
    if space.kind == "l1":
        violation = abs(primal_objective / value - 1.0)
        ident = "min ||x||_1 * ||L^* c_hat||_inf = 1 with <c_hat, y> = 1"
    else:
        violation = abs(primal_objective - value)
        ident = "min ||x|| = ||L^* c||_dual"
    return CheckReport.from_violation("duality_infimum", violation, tol,
                                      f"space={space}; identity: {ident}")


def check_support_inclusion(x: SparseSeq, c, op: SamplingOperator) -> CheckReport:
    """Every support index of ``x`` must attain the sup-norm of ``L^* c``.

    The violation is the number of offending indices; their total mass is
    reported in the details.
    """
    c = np.asarray(c, dtype=np.float64).ravel()
    nu = c @ op.matrix
    face = set(op.support[max_index_mask(nu)].tolist())
    bad = [j for j in x.indices.tolist() if j not in face]
    mass = float(sum(abs(x.get(j)) for j in bad))
    return CheckReport.from_violation(
        "support_inclusion", float(len(bad)), 0.0,
        f"off-face indices={bad}; off-face mass={mass:.17g}; "
        "identity: supp(x) lies in the maximal index set of L^* c",
    )


def check_hilbert_orthogonality(op: SamplingOperator, x: SparseSeq, rng: np.random.Generator,
                                directions: int = NULL_DIRECTIONS,
                                tol: float = ORTHOGONALITY_TOL) -> CheckReport:
    """``|<x, z>| <= tol`` for unit null-space directions ``z`` of ``L``."""
    a = op.matrix
    _, s, vt = np.linalg.svd(a)
    rank = int(np.sum(s > 1e-12 * s[0])) if s.size else 0
    null = vt[rank:].T
    xd = op.restrict(x)
    # unit vectors outside the operator's support are null directions as well
    off = x.values[~np.isin(x.indices, op.support)]
    worst = float(np.abs(off).max()) if off.size else 0.0
    for _ in range(directions if null.shape[1] else 0):
        z = null @ rng.standard_normal(null.shape[1])
        worst = max(worst, abs(float(xd @ (z / np.linalg.norm(z)))))
    return CheckReport.from_violation(
        "hilbert_orthogonality", worst, tol,
        f"directions={directions}; null space dimension={null.shape[1]}; identity: x is orthogonal to the null space of L",
    )


def _failure(name: str, exc: Exception) -> CheckReport:
    return CheckReport(name, False, math.inf, f"solver failure: {type(exc).__name__}: {exc}", math.nan)


def _l1_checks(inst: Instance, cfg: IterationConfig) -> list[CheckReport]:
    op, y = inst.op, inst.y
    out = []
    try:
        rep = solve_mni_l1(op, y, cfg)
        bp = basis_pursuit(op, y)
        c_hat, value = dual_inf_norm_lp(op, y)
        g = reconstruct_from_dual(op, y, c_hat)
    except BanachMNIError as exc:
        return [_failure("l1_solvers", exc)]
    out.append(CheckReport.from_violation(
        "l1_converged", 0.0 if rep.converged else math.inf, 0.0,
        f"iterations={rep.iterations}; fixed-point residual={rep.fixed_point_residual:.17g}",
    ))
    out.append(CheckReport.from_violation(
        "l1_oracle_equivalence", abs(rep.objective - bp.objective), ORACLE_TOL,
        f"iterative={rep.objective:.17g}; lp={bp.objective:.17g}; "
        "identity: both routes reach min ||x||_1 subject to L x = y",
    ))
    out.append(CheckReport.from_violation(
        "l1_strong_duality", abs(rep.objective * value - 1.0), DUALITY_TOL,
        f"objective={rep.objective:.17g}; dual value={value:.17g}; "
        "identity: min ||x||_1 = 1 / min{||L^* c||_inf : <c, y> = 1}",
    ))
    r1, r2 = fixed_point_residual_l1(op, y, rep.solution, rep.coefs)
    out.append(CheckReport.from_violation(
        "l1_fixed_point", max(r1, r2), CERTIFICATE_TOL,
        f"r_interp={r1:.17g}; r_prox={r2:.17g}; "
        "identity: c = prox_{iota_y^*}(c + L x) and x = prox_{||.||_1}(x - S L^* c)",
    ))
    sup = check_support_inclusion(rep.solution, rep.coefs, op)
    out.append(sup)
    linked = -float(np.abs(g.values).sum()) * c_hat
    lr = fixed_point_residual_l1(op, y, g, linked)
    out.append(CheckReport.from_violation(
        "l1_lp_pair_fixed_point", max(lr), CERTIFICATE_TOL,
        f"r_interp={lr[0]:.17g}; r_prox={lr[1]:.17g}; "
        "identity: the LP pair with c = -||x||_1 c_hat solves the fixed-point equations",
    ))
    peak = check_peak_functional(Space("l1"), op, c_hat, g)
    out.append(peak)
    return out


def _hilbert_checks(inst: Instance, cfg: IterationConfig) -> list[CheckReport]:
    op, y = inst.op, inst.y
    try:
        rep = solve_mni_hilbert(op, y)
    except BanachMNIError as exc:
        return [_failure("hilbert_solver", exc)]
    rng = np.random.default_rng(inst.seed)
    return [
        CheckReport.from_violation("hilbert_interpolation", rep.interp_residual, INTERP_TOL_HILBERT,
                                   "identity: L x = y for x = L^* G^{-1} y"),
        check_hilbert_orthogonality(op, rep.solution, rng),
        check_peak_functional(Space("hilbert"), op, rep.coefs, rep.solution),
        check_duality_infimum(Space("hilbert"), op, rep.objective, rep.coefs),
    ]


def _lp_checks(inst: Instance, cfg: IterationConfig) -> list[CheckReport]:
    out = []
    for p in LP_EXPONENTS:
        space = lp(p)
        tag = f"(p={p:g})"
        try:
            rep = solve_mni_lp_space(inst.op, inst.y, p, cfg)
        except BanachMNIError as exc:
            out.append(_failure(f"lp_solver{tag}", exc))
            continue
        out.append(CheckReport.from_violation(
            f"lp_interpolation{tag}", rep.interp_residual, INTERP_TOL_LP,
            "identity: L dmap_lq(L^* c) = y"))
        out.append(CheckReport.from_violation(
            f"lp_norm_duality{tag}", abs(rep.objective - infimum_report(inst.op, rep.coefs, space)),
            NORM_DUALITY_TOL, "identity: ||x||_p = ||L^* c||_q"))
        peak = check_peak_functional(space, inst.op, rep.coefs, rep.solution)
        peak.name += tag
        out.append(peak)
    return out


_SUITE_RUNNERS = {"l1": _l1_checks, "hilbert": _hilbert_checks, "lp": _lp_checks}


def run_suite(instances: list[Instance] | None = None, seeds: int = 100, seed: int = 0,
              suites=SUITES, cfg: IterationConfig | None = None) -> list[CheckReport]:
    """Run every check of the chosen suites on each instance.

    With ``instances=None``, ``seeds`` instances are generated by
    :func:`make_instances` from ``seed``. Reports are ordered by instance
    id, then suite order, then check order; solver failures become failed
    reports carrying the error text.
    """
    cfg = cfg or IterationConfig()
    for s in suites:
        if s not in _SUITE_RUNNERS:
            raise ValueError(f"unknown suite {s!r}; choose from {SUITES}")
    if instances is None:
        instances = make_instances(seeds, seed)
    reports = []
    for inst in sorted(instances, key=lambda i: i.id):
        for s in suites:
            for rep in _SUITE_RUNNERS[s](inst, cfg):
                rep.instance = inst.id
                rep.name = f"{s}/{rep.name}"
                reports.append(rep)
    return reports
