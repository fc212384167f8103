import numpy as np
import pytest

from specshift import cbf
from specshift.calculus import (
    apply,
    apply_diff,
    check_bound_31,
    check_bound_34_35,
    check_bound_36,
    check_commutator_38,
)
from specshift.cbf import make_psi, make_rational, make_remark43
from specshift.errors import HypothesisViolated, MeasureUnavailable, NotCommuting
from specshift.linalg import NormKind, operator_norm
from specshift.operators import OperatorInstance
from specshift.oracles import generate, random_unitary

ATOM = make_rational([(1.0, 1.0)], name="atom11")


def inst(m, norm=NormKind.L2):
    return OperatorInstance(np.asarray(m, dtype=complex), norm)


def test_apply_atom_on_diagonal():
    a = inst(np.diag([-1.0, -2.0]))
    res = apply(ATOM, a)
    assert np.allclose(res.value, np.diag([-0.5, -2.0 / 3.0]), atol=1e-12)


def test_apply_psi_on_minus_identity():
    res = apply(make_psi(2.0), inst(-np.eye(2)), tol=1e-12)
    expected = (np.log(2.0) - np.log(3.0)) * np.eye(2)
    assert np.max(np.abs(res.value - expected)) < 1e-10


def test_apply_similarity_oracle_small():
    p = np.array([[1.0, 1.0], [0.0, 1.0]], dtype=complex)
    p_inv = np.linalg.inv(p)
    a = inst(p @ np.diag([-1.0, -2.0]) @ p_inv)
    res = apply(ATOM, a)
    expected = p @ np.diag([-0.5, -2.0 / 3.0]) @ p_inv
    assert np.max(np.abs(res.value - expected)) < 1e-10


def test_apply_rejects_affine_part():
    f = cbf.CbfSpec(name="affine", c=-1.0, b=0.0, mu=ATOM.mu)
    with pytest.raises(HypothesisViolated):
        apply(f, inst(-np.eye(2)))


def test_apply_rejects_not_nonpositive():
    with pytest.raises(HypothesisViolated):
        apply(ATOM, inst(np.diag([1.0, -1.0])))


def test_apply_rejects_evaluation_only():
    with pytest.raises(MeasureUnavailable):
        apply(make_remark43(), inst(-np.eye(2)))


def test_apply_diff_scalars():
    a, b = inst([[-1.0]]), inst([[-2.0]])
    res = apply_diff(ATOM, a, b)
    assert res.value[0, 0] == pytest.approx(1.0 / 6.0, abs=1e-12)


def test_apply_diff_equal_pair_is_zero():
    a = inst(np.diag([-1.0, -3.0]))
    res = apply_diff(ATOM, a, a)
    assert np.max(np.abs(res.value)) == 0.0


def test_apply_diff_psi_diagonal():
    psi4 = make_psi(4.0)
    a = inst(np.diag([-1.0, -1.0]))
    b = inst(np.diag([-2.0, -1.0]))
    res = apply_diff(psi4, a, b, tol=1e-12)
    expected = np.diag(
        [cbf.evaluate(psi4, -1.0) - cbf.evaluate(psi4, -2.0), 0.0]
    )
    assert np.max(np.abs(res.value - expected)) < 1e-10


def test_apply_diff_consistent_with_apply():
    o = generate(seed=33, n=4, rank_k=2, cond_cap=8.0)
    for f in (ATOM, make_psi(3.0)):
        d1 = apply_diff(f, o.a_inst, o.b_inst, tol=1e-11).value
        d2 = apply(f, o.a_inst, tol=1e-11).value - apply(f, o.b_inst, tol=1e-11).value
        assert np.max(np.abs(d1 - d2)) < 1e-8


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_apply_oracle_equivalence_random(seed):
    o = generate(seed=seed, n=6, rank_k=3, cond_cap=20.0)
    cond_p = float(np.linalg.cond(o.p))
    tol = max(1e-8, cond_p * 1e-11)
    for f in (ATOM, make_psi(3.0), make_rational([(0.5, 1.0), (4.0, 2.0)])):
        res = apply(f, o.a_inst, tol=1e-11)
        expected = o.p @ np.diag([cbf.evaluate(f, complex(d)) for d in o.d_a]) @ o.p_inv
        assert np.max(np.abs(res.value - expected)) < tol


def test_stability_under_shrinking_perturbation():
    o = generate(seed=5, n=4, rank_k=2, cond_cap=10.0)
    a = o.a_inst
    v = o.b_inst.matrix - a.matrix
    f = make_psi(3.0)
    fa = apply(f, a, tol=1e-11).value
    prev = None
    for k in range(6):
        an = OperatorInstance(a.matrix + v / 2.0**k, a.norm)
        diff = operator_norm(apply(f, an, tol=1e-11).value - fa, a.norm)
        if prev is not None:
            assert diff <= prev / 2.0 * 1.2
        prev = diff


def test_bound_31_scalar_example():
    rep = check_bound_31(ATOM, inst([[-1.0]]), inst([[-2.0]]))
    assert rep.lhs == pytest.approx(1.0 / 6.0, abs=1e-10)
    assert rep.rhs == pytest.approx(1.5, abs=1e-6)
    assert rep.passed


def test_bound_31_equal_pair():
    a = inst(np.diag([-2.0, -1.0]))
    rep = check_bound_31(ATOM, a, a)
    assert rep.lhs == 0.0 and rep.rhs == 0.0 and rep.passed


def test_bound_31_random_pair():
    o = generate(seed=77, n=6, rank_k=3, cond_cap=30.0)
    rep = check_bound_31(make_psi(3.0), o.a_inst, o.b_inst)
    assert rep.passed


def test_bound_36_example_and_random():
    rep = check_bound_36(ATOM, inst([[-1.0]]), inst([[-2.0]]))
    assert rep.lhs == pytest.approx(1.0 / 6.0, abs=1e-10)
    assert rep.rhs == pytest.approx(1.0, abs=1e-6)
    assert rep.passed
    o = generate(seed=8, n=4, rank_k=1, cond_cap=10.0)
    rep2 = check_bound_36(make_psi(5.0), o.a_inst, o.b_inst)
    assert rep2.passed


def test_bound_36_rejects_infinite_slope():
    alpha_piece = cbf.TabulatedDensity(
        nodes=(0.1, 0.5), weights=(0.2, 0.2), support=(0.0, 1.0), zero_exponent=0.5
    )
    f = cbf.CbfSpec(name="steep", mu=cbf.MeasureSpec(densities=(alpha_piece,)))
    with pytest.raises(HypothesisViolated):
        check_bound_36(f, inst([[-1.0]]), inst([[-2.0]]))


def test_bound_34_35_diagonal_commuting():
    a = inst(np.diag([-1.0, -2.0]))
    b = inst(np.diag([-2.0, -2.5]))
    reports = check_bound_34_35(ATOM, a, b)
    assert all(r.passed for r in reports)
    names = {r.name for r in reports}
    assert "commuting_vectorwise" in names
    assert "single_operator_vectorwise" in names
    assert "single_operator_slope" in names


def test_bound_34_rejects_noncommuting():
    o = generate(seed=13, n=3, rank_k=1, cond_cap=20.0)
    # generic similarity pair: A-B does not commute with R(t,B) unless P unitary-diagonal
    rot = np.array([[0.0, -1.0, 0], [1.0, 0.0, 0], [0, 0, 1.0]])
    b2 = OperatorInstance(rot @ o.b_inst.matrix @ rot.T - 0.5 * np.eye(3), NormKind.L2)
    with pytest.raises(NotCommuting):
        check_bound_34_35(ATOM, o.a_inst, b2)


def test_bound_35_minus_identity():
    reports = check_bound_34_35(ATOM, inst(-np.eye(2)))
    by_name = {r.name: r for r in reports}
    rep = by_name["single_operator_vectorwise"]
    # ||f(-I)x|| = 1/2, bound -(2M+1) f(-1) = 3/2
    assert rep.lhs == pytest.approx(0.5, abs=1e-9)
    assert rep.rhs == pytest.approx(1.5, abs=1e-6)
    assert rep.passed


def test_bound_35_slope_example():
    a = inst(np.diag([-1.0, -2.0]))
    reports = check_bound_34_35(ATOM, a)
    rep = {r.name: r for r in reports}["single_operator_slope"]
    assert rep.passed
    # basis vector e2: ||f(A)e2|| = 2/3 <= 3 * 1 * 2
    fa = apply(ATOM, a).value
    assert abs(fa[1, 1]) == pytest.approx(2.0 / 3.0, abs=1e-10)


def test_commutator_38_identity_and_diagonal():
    a = inst(np.diag([-1.0, -2.0]))
    for u in (np.eye(2), np.diag([2.0, 3.0])):
        reports = check_commutator_38(ATOM, a, u)
        for r in reports:
            assert r.passed
            assert r.lhs <= 1e-10


def test_commutator_38_permutation():
    a = inst(np.diag([-1.0, -2.0]))
    u = np.array([[0.0, 1.0], [1.0, 0.0]])
    reports = check_commutator_38(ATOM, a, u)
    assert all(r.passed for r in reports)
    assert reports[0].lhs > 0.01  # genuinely non-commuting case
    assert reports[0].details["conjugation_mismatch"] < 1e-9


def test_commutator_38_random_unitary():
    o = generate(seed=55, n=4, rank_k=1, cond_cap=10.0)
    u = random_unitary(np.random.default_rng(3), 4)
    reports = check_commutator_38(make_psi(4.0), o.a_inst, u)
    assert all(r.passed for r in reports)
