import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from specshift.errors import SingularMatrix, UnsupportedNorm
from specshift.linalg import (
    NormKind,
    as_matrix,
    det,
    lu_solve,
    matrix_from_dict,
    matrix_to_dict,
    nuclear_norm,
    operator_norm,
    singular_values,
    trace,
)
from specshift.oracles import random_unitary


def test_lu_solve_identity():
    b = np.array([[1.0, 2.0], [3.0, 4.0]], dtype=complex)
    assert np.allclose(lu_solve(np.eye(2), b), b)


def test_lu_solve_scaled_identity():
    x = lu_solve(2.0 * np.eye(2), np.eye(2))
    assert np.allclose(x, 0.5 * np.eye(2))


def test_lu_solve_hand_inverse():
    a = np.array([[2.0, 1.0], [1.0, 2.0]], dtype=complex)
    x = lu_solve(a, np.eye(2))
    expected = np.array([[2.0, -1.0], [-1.0, 2.0]]) / 3.0
    assert np.allclose(x, expected, atol=1e-14)


def test_lu_singular_raises():
    with pytest.raises(SingularMatrix):
        lu_solve(np.zeros((2, 2)), np.eye(2))
    with pytest.raises(SingularMatrix):
        lu_solve(np.array([[1.0, 1.0], [1.0, 1.0]]), np.eye(2))


def test_det_examples():
    assert det(np.eye(2)) == pytest.approx(1.0)
    assert det(np.diag([-1.0, -2.0])) == pytest.approx(2.0)
    assert det(np.array([[0.0, 1.0], [1.0, 0.0]])) == pytest.approx(-1.0)
    assert det(np.ones((2, 2))) == 0.0


def test_operator_norm_examples():
    for kind in NormKind:
        assert operator_norm(np.eye(3), kind) == pytest.approx(1.0)
    assert operator_norm(np.array([[1.0, 0.0], [3.0, 0.0]]), NormKind.L1) == pytest.approx(4.0)
    assert operator_norm(np.array([[0.0, 2.0], [0.0, 0.0]]), NormKind.L2) == pytest.approx(2.0)
    assert operator_norm(np.array([[1.0, 2.0], [0.5, 0.0]]), NormKind.LINF) == pytest.approx(3.0)


def test_trace_and_nuclear_examples():
    assert trace(np.diag([-1.0, -2.0])) == pytest.approx(-3.0)
    assert nuclear_norm(np.eye(2)) == pytest.approx(2.0)
    assert nuclear_norm(np.array([[0.0, 3.0], [0.0, 0.0]])) == pytest.approx(3.0)
    with pytest.raises(UnsupportedNorm):
        nuclear_norm(np.eye(2), NormKind.L1)


def test_nuclear_norm_dominates_l2_norm():
    rng = np.random.default_rng(7)
    for _ in range(20):
        a = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
        assert nuclear_norm(a) >= operator_norm(a, NormKind.L2) - 1e-12


def test_lu_residual_on_random_well_conditioned():
    rng = np.random.default_rng(1234)
    for _ in range(100):
        n = int(rng.integers(2, 9))
        a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)) + 3.0 * np.eye(n)
        b = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        x = lu_solve(a, b)
        resid = np.max(np.abs(a @ x - b))
        bound = 1e-10 * (1.0 + np.max(np.abs(a)) * np.max(np.abs(b)))
        assert resid <= bound


def test_det_multiplicative_on_random_pairs():
    rng = np.random.default_rng(99)
    for _ in range(30):
        a = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
        b = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
        lhs = det(a @ b)
        rhs = det(a) * det(b)
        assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(rhs))


def test_nuclear_norm_matches_constructed_singular_values():
    rng = np.random.default_rng(4242)
    for _ in range(10):
        n = 6
        u = random_unitary(rng, n)
        v = random_unitary(rng, n)
        s = np.sort(rng.uniform(0.1, 5.0, n))[::-1]
        a = u @ np.diag(s) @ v.conj().T
        assert nuclear_norm(a) == pytest.approx(np.sum(s), rel=1e-8)
        assert np.allclose(np.sort(singular_values(a)), np.sort(s), rtol=1e-8)


@pytest.mark.parametrize("kind", list(NormKind))
def test_operator_norm_submultiplicative(kind):
    rng = np.random.default_rng(11)
    for _ in range(25):
        a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        b = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        assert operator_norm(a @ b, kind) <= operator_norm(a, kind) * operator_norm(b, kind) + 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=1, max_value=6), st.integers(min_value=0, max_value=2**31 - 1))
def test_l2_norm_agrees_with_svd(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    ref = float(np.max(singular_values(a)))
    assert operator_norm(a, NormKind.L2) == pytest.approx(ref, rel=1e-8, abs=1e-12)


def test_matrix_roundtrip():
    a = np.array([[1.0 + 2.0j, 0.0], [-1.0, 3.5j]])
    d = matrix_to_dict(a)
    assert d["n"] == 2
    assert np.array_equal(matrix_from_dict(d), a)


def test_as_matrix_rejects_bad_shapes():
    with pytest.raises(ValueError):
        as_matrix(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        as_matrix(np.array([[np.inf, 0.0], [0.0, 0.0]]))
