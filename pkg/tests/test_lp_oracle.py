import warnings

import numpy as np
import pytest
from hypothesis import given, settings

from banach_mni import (
    DegenerateInputError,
    InfeasibleError,
    NumericalDualityError,
    SamplingOperator,
    SparseSeq,
    apply_L,
    apply_Lstar,
    basis_pursuit,
    dual_inf_norm_lp,
    linf_subdiff_membership,
    make_instances,
    reconstruct_from_dual,
    simplex_solve,
)
from banach_mni.lp_oracle import StandardLP
from oracles import basis_pursuit_enumeration
from strategies import operators, seeds

e0, e1 = SparseSeq.unit(0), SparseSeq.unit(1)
ROW = [[(0, 1), (1, 0.5)]]


def test_simplex_forced_variable():
    res = simplex_solve(StandardLP(np.array([1.0]), np.array([[1.0]]), np.array([1.0])))
    assert res.optimal and res.value == 1


def test_simplex_split_variables():
    # x1 + 0.5 x2 = 1 with x = x+ - x-, objective |x1| + |x2|
    a = np.array([[1.0, 0.5, -1.0, -0.5]])
    res = simplex_solve(StandardLP(np.ones(4), a, np.array([1.0])))
    assert res.optimal and res.value == pytest.approx(1)
    assert res.x[:2] - res.x[2:] == pytest.approx([1, 0])


def test_simplex_infeasible_and_unbounded_are_distinct():
    res = simplex_solve(StandardLP(np.array([0.0]), np.array([[1.0]]), np.array([-1.0])))
    assert res.status == "infeasible"
    res = simplex_solve(StandardLP(np.array([-1.0, 0.0]), np.array([[1.0, -1.0]]), np.array([0.0])))
    assert res.status == "unbounded"


def test_simplex_degenerate_cycling_prone_lp():
    # the Beale example cycles under the textbook largest-coefficient rule; Bland's rule must terminate
    c = np.array([-0.75, 150.0, -0.02, 6.0, 0, 0, 0])
    a = np.array([
        [0.25, -60.0, -0.04, 9.0, 1, 0, 0],
        [0.5, -90.0, -0.02, 3.0, 0, 1, 0],
        [0.0, 0.0, 1.0, 0.0, 0, 0, 1],
    ])
    res = simplex_solve(StandardLP(c, a, np.array([0.0, 0.0, 1.0])))
    assert res.optimal and res.value == pytest.approx(-0.05)


def test_basis_pursuit_examples():
    rep = basis_pursuit(SamplingOperator(ROW), [1])
    assert rep.objective == pytest.approx(1) and rep.solution == SparseSeq([(0, 1)])
    rep = basis_pursuit(SamplingOperator([e0, e1]), [2, 3])
    assert rep.objective == pytest.approx(5) and rep.solution == SparseSeq([(0, 2), (1, 3)])
    rep = basis_pursuit(SamplingOperator(ROW), [0])
    assert rep.objective == 0 and rep.solution == SparseSeq()


def test_basis_pursuit_inconsistent_data():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        op = SamplingOperator([e0, SparseSeq([(0, 2.0)])])
    with pytest.raises(InfeasibleError):
        basis_pursuit(op, [1, 3])


def test_dual_examples():
    c, v = dual_inf_norm_lp(SamplingOperator(ROW), [1])
    assert c.tolist() == pytest.approx([1]) and v == pytest.approx(1)
    c, v = dual_inf_norm_lp(SamplingOperator([e0]), [2])
    assert c.tolist() == pytest.approx([0.5]) and 1 / v == pytest.approx(2)
    c, v = dual_inf_norm_lp(SamplingOperator([e0, e1]), [1, 0])
    assert v == pytest.approx(1) and c[0] == pytest.approx(1)


def test_dual_rejects_zero_data():
    with pytest.raises(DegenerateInputError):
        dual_inf_norm_lp(SamplingOperator(ROW), [0])


def test_reconstruct_examples():
    op = SamplingOperator(ROW)
    assert reconstruct_from_dual(op, [1], [1]) == SparseSeq([(0, 1)])
    op = SamplingOperator([e0, e1])
    c, _ = dual_inf_norm_lp(op, [2, 3])
    g = reconstruct_from_dual(op, [2, 3], c)
    assert apply_L(op, g) == pytest.approx([2, 3]) and np.abs(g.values).sum() == pytest.approx(5)


def test_reconstruct_is_homogeneous():
    inst = make_instances(1, seed=21)[0]
    c, _ = dual_inf_norm_lp(inst.op, inst.y)
    g = reconstruct_from_dual(inst.op, inst.y, c)
    g3 = reconstruct_from_dual(inst.op, 3 * inst.y, c / 3)
    assert np.allclose(g3.to_dense(g.indices), 3 * g.values, rtol=1e-9, atol=1e-12)


def test_reconstruct_flags_non_optimal_coefficients():
    op = SamplingOperator([e0, e1])
    # <c, y> = 1 but c is far from optimal: the face {1} cannot carry y = [1, 1]
    with pytest.raises(NumericalDualityError):
        reconstruct_from_dual(op, [1, 1], [0.2, 0.8])


@settings(max_examples=60)
@given(operators(max_rows=4, max_index=9), seeds)
def test_basis_pursuit_matches_enumeration(op, seed):
    y = np.random.default_rng(seed).standard_normal(op.m)
    want, _ = basis_pursuit_enumeration(op.matrix, y)
    rep = basis_pursuit(op, y)
    assert rep.objective == pytest.approx(want, rel=1e-9, abs=1e-12)
    assert np.max(np.abs(apply_L(op, rep.solution) - y)) <= 1e-9 * (1 + np.abs(y).max())


def test_strong_duality_and_reconstruction_on_random_instances():
    for inst in make_instances(40, seed=2) + make_instances(20, seed=2, tie_stress=True):
        bp = basis_pursuit(inst.op, inst.y)
        c, v = dual_inf_norm_lp(inst.op, inst.y)
        assert bp.objective * v == pytest.approx(1, abs=1e-8)
        g = reconstruct_from_dual(inst.op, inst.y, c)
        assert np.max(np.abs(apply_L(inst.op, g) - inst.y)) <= 1e-8
        xn = np.abs(g.values).sum()
        assert xn == pytest.approx(bp.objective, abs=1e-8)
        nu = apply_Lstar(inst.op, c / v)  # sup-norm 1
        assert linf_subdiff_membership(SparseSeq.from_arrays(g.indices, g.values / xn), nu, 1.0, tol=1e-8)


def test_agrees_with_scipy_highs():
    linprog = pytest.importorskip("scipy.optimize").linprog
    for inst in make_instances(30, seed=8):
        a = inst.op.matrix
        n = a.shape[1]
        res = linprog(np.ones(2 * n), A_eq=np.hstack([a, -a]), b_eq=inst.y, bounds=(0, None), method="highs")
        assert basis_pursuit(inst.op, inst.y).objective == pytest.approx(res.fun, rel=1e-8)
