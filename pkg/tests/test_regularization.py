import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from banach_mni import (
    HILBERT,
    L1,
    LossSpec,
    ParameterError,
    RegProblem,
    Regularizer,
    SamplingOperator,
    SparseSeq,
    apply_L,
    apply_Lstar,
    check_mni_reg_link,
    lp,
    make_instances,
    norm,
    reg_objective,
    solve_reg,
)
from banach_mni.regularization import (
    reg_fixed_point_residual_l1,
    solve_reg_hilbert_prox,
    solve_reg_hilbert_square,
    solve_reg_l1,
    solve_reg_lp_space,
)
from oracles import golden_min_1d, grid_refine_min, lasso_coordinate_descent
from strategies import operators, seeds

E0 = SamplingOperator([SparseSeq.unit(0)])
DESK_ROWS = [[(0, 1), (1, 0.5)], [(1, -1), (2, 2)]]
# optimal objectives of the two nonsmooth desk instances below, from grid_refine_min on [-3, 3]^3
FROZEN_HINGE_DESK = 0.45
FROZEN_EPS_DESK = 0.285


def l1_problem(op, kind, y, lam, eps=0.0):
    return RegProblem(op, L1, LossSpec(kind, y, eps), lam, Regularizer.identity())


# ---- Hilbert ---------------------------------------------------------------

def test_ridge_examples():
    op = SamplingOperator([SparseSeq.unit(0), SparseSeq.unit(1)])
    assert solve_reg_hilbert_square(op, [2, 4], 1).coefs == pytest.approx([1, 2], abs=1e-15)
    op = SamplingOperator([[(0, 1)], [(0, 1), (1, 1)]])
    assert solve_reg_hilbert_square(op, [1, 2], 1).coefs == pytest.approx([0.2, 0.6], abs=1e-15)


def test_ridge_norm_decreases_with_lambda():
    inst = make_instances(1, seed=6)[0]
    norms = [solve_reg_hilbert_square(inst.op, inst.y, lam).objective for lam in np.geomspace(1e-3, 1e3, 25)]
    sol_norms = [norm(solve_reg_hilbert_square(inst.op, inst.y, lam).solution, HILBERT)
                 for lam in np.geomspace(1e-3, 1e3, 25)]
    assert np.all(np.diff(sol_norms) < 0)
    assert all(math.isfinite(v) for v in norms)


def test_hinge_prox_route_examples():
    big = solve_reg_hilbert_prox(E0, RegProblem(E0, HILBERT, LossSpec("hinge", [1]), 1000.0))
    assert big.converged and abs(big.coefs[0]) <= 1e-3
    small = solve_reg_hilbert_prox(E0, RegProblem(E0, HILBERT, LossSpec("hinge", [1]), 0.25))
    grid = np.linspace(-2, 2, 400001)
    best = grid[np.argmin(np.maximum(1 - grid, 0) + 0.25 * grid**2)]
    assert small.solution.get(0) == pytest.approx(best, abs=1e-5)


def test_hilbert_routes_agree_on_random_instances():
    for inst in make_instances(20, seed=31):
        for lam in (0.01, 1.0):
            a = solve_reg_hilbert_square(inst.op, inst.y, lam)
            b = solve_reg_hilbert_prox(inst.op, RegProblem(inst.op, HILBERT, LossSpec("square", inst.y), lam))
            assert b.converged
            assert np.max(np.abs(a.coefs - b.coefs)) <= 1e-7


# ---- lp --------------------------------------------------------------------

def test_lp_two_square_matches_ridge():
    inst = make_instances(1, seed=17)[0]
    a = solve_reg_lp_space(inst.op, RegProblem(inst.op, lp(2), LossSpec("square", inst.y), 0.5))
    b = solve_reg_hilbert_square(inst.op, inst.y, 0.5)
    assert np.allclose(a.coefs, b.coefs, atol=1e-9)


@pytest.mark.parametrize("p", [1.5, 4.0])
def test_lp_one_dimensional_against_golden_section(p):
    y, lam = 1.7, 0.6
    rep = solve_reg_lp_space(E0, RegProblem(E0, lp(p), LossSpec("square", [y]), lam))
    x = golden_min_1d(lambda t: (t - y) ** 2 + lam * t**2, -5, 5)
    assert rep.solution.get(0) == pytest.approx(x, abs=1e-7)


def test_lp_zero_data():
    inst = make_instances(1, seed=2)[0]
    rep = solve_reg_lp_space(inst.op, RegProblem(inst.op, lp(3), LossSpec("square", np.zeros(inst.op.m)), 1.0))
    assert rep.solution == SparseSeq() and not np.any(rep.coefs)


def test_lp_rejects_nonsmooth_loss():
    with pytest.raises(ParameterError):
        solve_reg_lp_space(E0, RegProblem(E0, lp(3), LossSpec("hinge", [1]), 1.0))


@pytest.mark.parametrize("p", [1.5, 3.0])
@pytest.mark.parametrize("r", [1.0, 2.0])
def test_lp_against_direct_minimization(p, r):
    inst = make_instances(1, seed=40)[0]
    lam = 0.3
    prob = RegProblem(inst.op, lp(p), LossSpec("square", inst.y), lam, Regularizer(r))
    rep = solve_reg_lp_space(inst.op, prob)
    x = rep.solution.to_dense(inst.op.support)
    a = inst.op.matrix
    rng = np.random.default_rng(0)

    def f(v):
        return float(np.sum((a @ v - inst.y) ** 2) + lam * np.sum(np.abs(v) ** p) ** (r / p))

    # no random perturbation may do better than the returned point
    base = f(x)
    assert base == pytest.approx(reg_objective(prob, rep.solution), rel=1e-12)
    for _ in range(200):
        assert f(x + 1e-4 * rng.standard_normal(x.size)) >= base - 1e-12


# ---- l1 --------------------------------------------------------------------

def test_lasso_one_dimensional():
    prob = l1_problem(E0, "square", [2], 1)
    rep = solve_reg_l1(prob)
    assert rep.solution.get(0) == pytest.approx(1.5, abs=1e-8)
    assert rep.coefs == pytest.approx([-1], abs=1e-8)
    assert max(reg_fixed_point_residual_l1(prob, rep.solution, rep.coefs)) <= 1e-8


def test_residual_examples():
    prob = l1_problem(E0, "square", [2], 1)
    assert max(reg_fixed_point_residual_l1(prob, SparseSeq([(0, 1.5)]), [-1])) <= 1e-10
    assert reg_fixed_point_residual_l1(prob, SparseSeq(), [0])[0] > 0


def test_large_lambda_kills_solution():
    inst = make_instances(1, seed=8)[0]
    threshold = 2 * np.abs(inst.op.matrix.T @ inst.y).max()  # ||L^* grad Q(0)||_inf
    rep = solve_reg_l1(l1_problem(inst.op, "square", inst.y, threshold * 1.01))
    assert rep.solution == SparseSeq()
    rep = solve_reg_l1(l1_problem(inst.op, "square", inst.y, threshold * 0.9))
    assert rep.solution != SparseSeq()


@pytest.mark.parametrize("kind,y,eps,frozen", [
    ("hinge", [1, -1], 0.0, FROZEN_HINGE_DESK),
    ("eps_insensitive", [1.0, -0.5], 0.2, FROZEN_EPS_DESK),
])
def test_nonsmooth_desk_instances(kind, y, eps, frozen):
    op = SamplingOperator(DESK_ROWS)
    rep = solve_reg_l1(l1_problem(op, kind, y, 0.3, eps))
    assert rep.converged
    assert rep.objective == pytest.approx(frozen, abs=1e-6)


def test_hinge_desk_grid_oracle():
    op = SamplingOperator(DESK_ROWS)
    loss = LossSpec("hinge", [1, -1])
    a = op.matrix
    best, _ = grid_refine_min(lambda x: loss.value(a @ x) + 0.3 * np.abs(x).sum(), -3, 3, 3, points=21, levels=25)
    assert best == pytest.approx(FROZEN_HINGE_DESK, abs=1e-9)


def test_hinge_desk_against_lp():
    linprog = pytest.importorskip("scipy.optimize").linprog
    a = SamplingOperator(DESK_ROWS).matrix
    ylab = np.array([1.0, -1.0])
    m, n = a.shape
    # variables x+, x-, slack t >= 1 - y (A x), t >= 0
    cost = np.concatenate([0.3 * np.ones(2 * n), np.ones(m)])
    ya = ylab[:, None] * a
    a_ub = np.hstack([-ya, ya, -np.eye(m)])
    res = linprog(cost, A_ub=a_ub, b_ub=-np.ones(m), bounds=(0, None), method="highs")
    assert res.fun == pytest.approx(FROZEN_HINGE_DESK, abs=1e-12)


@settings(max_examples=40)
@given(operators(max_rows=5, max_index=14), seeds, st.floats(0.05, 2.0))
def test_lasso_against_coordinate_descent(op, seed, lam):
    y = np.random.default_rng(seed).standard_normal(op.m)
    prob = l1_problem(op, "square", y, lam)
    rep = solve_reg_l1(prob)
    assert rep.converged
    x = lasso_coordinate_descent(op.matrix, y, lam)
    want = float(np.sum((op.matrix @ x - y) ** 2) + lam * np.abs(x).sum())
    assert rep.objective == pytest.approx(want, abs=1e-8)


def test_l1_certification_and_support_on_random_instances():
    for inst in make_instances(15, seed=12):
        labels = np.where(inst.y >= 0, 1.0, -1.0)
        for prob in (l1_problem(inst.op, "square", inst.y, 0.2),
                     l1_problem(inst.op, "hinge", labels, 0.2),
                     l1_problem(inst.op, "eps_insensitive", inst.y, 0.2, 0.1)):
            rep = solve_reg_l1(prob)
            assert rep.converged
            assert max(reg_fixed_point_residual_l1(prob, rep.solution, rep.coefs)) <= 1e-7
            zero = prob.loss.value(np.zeros(inst.op.m))
            assert rep.objective <= zero + 1e-12
            if rep.solution:
                u = apply_Lstar(inst.op, rep.coefs)
                top = np.abs(u.values).max()
                maximal = {int(i) for i, v in zip(u.indices, u.values) if abs(v) >= (1 - 1e-7) * top}
                assert rep.solution.support <= maximal


def test_l1_nonconvergence_flags_report():
    inst = make_instances(1, seed=42)[0]
    from banach_mni.report import IterationConfig

    labels = np.where(inst.y >= 0, 1.0, -1.0)
    rep = solve_reg_l1(l1_problem(inst.op, "hinge", labels, 0.05), IterationConfig(max_iter=3, check_every=1))
    assert not rep.converged


def test_l1_needs_identity_regularizer():
    with pytest.raises(ParameterError):
        solve_reg_l1(RegProblem(E0, L1, LossSpec("square", [1]), 1.0, Regularizer.square()))


# ---- link ------------------------------------------------------------------

def test_link_examples():
    inst = make_instances(1, seed=14)[0]
    rep = check_mni_reg_link(RegProblem(inst.op, HILBERT, LossSpec("square", inst.y), 0.7))
    assert rep.passed and rep.max_violation <= 1e-8
    rep = check_mni_reg_link(l1_problem(E0, "square", [2], 1))
    assert rep.passed and rep.max_violation <= 1e-9
    rep = check_mni_reg_link(l1_problem(inst.op, "square", inst.y, 1e6))
    assert rep.passed and rep.max_violation == 0


@pytest.mark.parametrize("space", [HILBERT, L1, lp(1.5), lp(3)])
def test_link_on_random_instances(space):
    reg = Regularizer.identity() if space == L1 else Regularizer.square()
    for inst in make_instances(10, seed=50):
        rep = check_mni_reg_link(RegProblem(inst.op, space, LossSpec("square", inst.y), 0.4, reg))
        assert rep.passed, rep.details


def test_regularizer_validation():
    with pytest.raises(ParameterError):
        Regularizer(0.0)
    assert Regularizer(3.0).derivative(0.0) == 0
    assert Regularizer.identity().derivative(0.0) == 1
    assert Regularizer(3.0)(2.0) == 8
