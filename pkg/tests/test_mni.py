import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from banach_mni import (
    HILBERT,
    L1,
    DegenerateInputError,
    DegenerateOperatorError,
    NonConvergenceError,
    SamplingOperator,
    SparseSeq,
    apply_L,
    apply_Lstar,
    basis_pursuit,
    dual_inf_norm_lp,
    fixed_point_residual_l1,
    infimum_report,
    lp,
    make_instances,
    norm,
    reconstruct_from_dual,
    solve_mni,
    solve_mni_hilbert,
    solve_mni_l1,
    solve_mni_lp_space,
)
from banach_mni.report import IterationConfig
from oracles import lp_projected_gradient, min_norm_l2
from strategies import operators, seeds

e0, e1 = SparseSeq.unit(0), SparseSeq.unit(1)
ROW = [[(0, 1), (1, 0.5)]]
SYM = [[(0, 1), (1, 1)]]

# objectives of make_instances(3, seed=42) for p = 1.5, 3, 4, computed once with the
# projected-gradient oracle in oracles.py and frozen here
FROZEN_LP = {
    0: (0.6551277616997617, 0.2876380810292184, 0.22693141280582269),
    1: (0.06095254652936931, 0.0346240577248588, 0.029716956650430143),
    2: (0.7832408794950582, 0.34841759743734463, 0.2797704564833163),
}


# ---- Hilbert ---------------------------------------------------------------

def test_hilbert_examples():
    rep = solve_mni_hilbert(SamplingOperator([e0, e1]), [2, 3])
    assert rep.coefs.tolist() == [2, 3]
    assert rep.solution == SparseSeq([(0, 2), (1, 3)])
    assert rep.objective == pytest.approx(math.sqrt(13), abs=1e-15)
    rep = solve_mni_hilbert(SamplingOperator([[(0, 1)], [(0, 1), (1, 1)]]), [1, 2])
    assert rep.coefs == pytest.approx([0, 1], abs=1e-15)
    assert rep.solution.to_dense([0, 1]) == pytest.approx([1, 1])
    rep = solve_mni_hilbert(SamplingOperator([e0, e1]), [0, 0])
    assert not rep.coefs.any() and rep.solution == SparseSeq()


def test_hilbert_singular_gram():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        op = SamplingOperator([[(0, 1)], [(0, 2)]])
    with pytest.raises(DegenerateOperatorError):
        solve_mni_hilbert(op, [1, 2])


@given(operators(), seeds)
def test_hilbert_matches_pseudoinverse(op, seed):
    y = np.random.default_rng(seed).standard_normal(op.m)
    rep = solve_mni_hilbert(op, y)
    want = min_norm_l2(op.matrix, y)
    assert np.allclose(rep.solution.to_dense(op.support), want, rtol=1e-8, atol=1e-8 * (1 + np.abs(want).max()))


# ---- lp --------------------------------------------------------------------

@pytest.mark.parametrize("p", [1.5, 2.0, 3.0, 4.0, 7.0])
def test_lp_coordinate_functional(p):
    rep = solve_mni_lp_space(SamplingOperator([e0]), [1], p)
    assert rep.coefs == pytest.approx([1], abs=1e-12)
    assert rep.solution.to_dense([0]) == pytest.approx([1], abs=1e-12)
    assert rep.objective == pytest.approx(1, abs=1e-12)


def test_lp_two_reproduces_hilbert():
    inst = make_instances(1, seed=5)[0]
    a = solve_mni_lp_space(inst.op, inst.y, 2.0)
    b = solve_mni_hilbert(inst.op, inst.y)
    assert np.allclose(a.coefs, b.coefs, rtol=1e-9, atol=1e-12)


def test_lp_symmetric_p4():
    rep = solve_mni_lp_space(SamplingOperator(SYM), [1], 4)
    assert rep.objective == pytest.approx(2 ** -0.75, abs=1e-12)
    assert rep.solution.to_dense([0, 1]) == pytest.approx([0.5, 0.5], abs=1e-12)
    assert rep.coefs == pytest.approx([2 ** -1.5], abs=1e-12)


def test_lp_zero_data():
    rep = solve_mni_lp_space(SamplingOperator(ROW), [0], 3)
    assert rep.solution == SparseSeq() and rep.objective == 0


@pytest.mark.parametrize("p", [1.5, 3.0])
def test_lp_nonconvergence_raises_with_best_residual(p):
    inst = make_instances(1, seed=42)[0]
    with pytest.raises(NonConvergenceError) as info:
        solve_mni_lp_space(inst.op, inst.y, p, IterationConfig(max_iter=1))
    assert 0 < info.value.best_residual < math.inf


@pytest.mark.parametrize("k", sorted(FROZEN_LP))
def test_lp_frozen_objectives(k):
    inst = make_instances(3, seed=42)[k]
    for p, want in zip((1.5, 3.0, 4.0), FROZEN_LP[k]):
        assert solve_mni_lp_space(inst.op, inst.y, p).objective == pytest.approx(want, abs=1e-9)


@settings(max_examples=40)
@given(operators(max_rows=4, max_index=12), seeds, st.sampled_from([1.5, 3.0, 4.0]))
def test_lp_against_projected_gradient(op, seed, p):
    y = np.random.default_rng(seed).standard_normal(op.m)
    rep = solve_mni_lp_space(op, y, p)
    want, _ = lp_projected_gradient(op.matrix, y, p)
    assert rep.objective == pytest.approx(want, abs=1e-5)
    assert rep.interp_residual <= 1e-8
    assert rep.objective == pytest.approx(infimum_report(op, rep.coefs, lp(p)), abs=1e-8)


# ---- l1 --------------------------------------------------------------------

def test_l1_examples():
    rep = solve_mni_l1(SamplingOperator(ROW), [1])
    assert rep.converged
    assert rep.objective == pytest.approx(basis_pursuit(SamplingOperator(ROW), [1]).objective, abs=1e-8)
    assert rep.solution.support <= {0}
    rep = solve_mni_l1(SamplingOperator(ROW), [0])
    assert rep.solution == SparseSeq() and not rep.coefs.any()
    rep = solve_mni_l1(SamplingOperator([e0, e1]), [2, 3])
    assert rep.objective == pytest.approx(5, abs=1e-8)
    assert rep.solution.to_dense([0, 1]) == pytest.approx([2, 3], abs=1e-8)


def test_l1_nonconvergence_returns_best_iterate():
    inst = make_instances(1, seed=42)[0]
    rep = solve_mni_l1(inst.op, inst.y, IterationConfig(max_iter=5, check_every=1))
    assert not rep.converged
    r = fixed_point_residual_l1(inst.op, inst.y, rep.solution, rep.coefs)
    assert rep.fixed_point_residual == pytest.approx(max(r), rel=1e-9)


def test_l1_without_whitening_agrees():
    inst = make_instances(1, seed=3)[0]
    a = solve_mni_l1(inst.op, inst.y, precondition=False)
    b = solve_mni_l1(inst.op, inst.y)
    assert a.converged and b.converged
    assert a.objective == pytest.approx(b.objective, abs=1e-7)


def test_fixed_point_residual_examples():
    op = SamplingOperator(ROW)
    bp = basis_pursuit(op, [1])
    c_hat, _ = dual_inf_norm_lp(op, [1])
    c = -np.abs(bp.solution.values).sum() * c_hat
    assert max(fixed_point_residual_l1(op, [1], bp.solution, c)) <= 1e-12
    assert fixed_point_residual_l1(op, [1], SparseSeq(), [0])[0] == 1
    inst = make_instances(1, seed=9)[0]
    x = solve_mni_hilbert(inst.op, inst.y).solution  # interpolates but is not l1-minimal
    assert fixed_point_residual_l1(inst.op, inst.y, x, np.ones(inst.op.m))[0] <= 1e-12


def test_infimum_examples():
    assert infimum_report(SamplingOperator([e0, e1]), [2, 3], HILBERT) == pytest.approx(math.sqrt(13))
    assert infimum_report(SamplingOperator(SYM), [2 ** -1.5], lp(4)) == pytest.approx(2 ** -0.75, abs=1e-15)
    assert infimum_report(SamplingOperator(ROW), [1], L1) == pytest.approx(1)
    with pytest.raises(DegenerateInputError):
        infimum_report(SamplingOperator(ROW), [0], L1)


def test_l1_support_inside_maximal_set():
    for inst in make_instances(15, seed=4):
        rep = solve_mni_l1(inst.op, inst.y)
        u = apply_Lstar(inst.op, rep.coefs)
        top = np.abs(u.values).max()
        maximal = {int(i) for i, v in zip(u.indices, u.values) if abs(v) >= (1 - 1e-9) * top}
        assert rep.solution.support <= maximal


# ---- scaling ---------------------------------------------------------------

@pytest.mark.parametrize("space", [HILBERT, L1, lp(1.5), lp(3)])
@pytest.mark.parametrize("alpha", [-2.5, 0.1, 7.0])
def test_scaling_equivariance(space, alpha):
    inst = make_instances(1, seed=13)[0]
    a = solve_mni(inst.op, inst.y, space)
    b = solve_mni(inst.op, alpha * inst.y, space)
    assert b.objective == pytest.approx(abs(alpha) * a.objective, rel=1e-7)
    if space != L1:  # l1 minimizers need not be unique
        x = a.solution.to_dense(inst.op.support)
        assert np.allclose(b.solution.to_dense(inst.op.support), alpha * x, atol=1e-7 * abs(alpha))


def test_dispatch_and_methods():
    inst = make_instances(1, seed=1)[0]
    assert solve_mni(inst.op, inst.y, HILBERT).method == "hilbert_gram"
    assert solve_mni(inst.op, inst.y, L1).method.startswith("l1_primal_dual")
    assert solve_mni(inst.op, inst.y, lp(3)).method.startswith("lp_")
