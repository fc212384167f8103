"""Resolvent-integral functional calculus: f(A), f(A) - f(B), and norm bounds.

f(A) is the measure integral of A R(t,A); the integrand is formed as
-I + t R(t,A), one linear solve per node.  Differences f(A) - f(B) integrate
t R(t,A) (A-B) R(t,B), the factored form of the resolvent difference, which
avoids cancellation between two nearly equal resolvents at large t.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import cbf
from .errors import HypothesisViolated, NotCommuting, UnsupportedNorm
from .linalg import (
    NormKind,
    identity,
    lu_factor,
    nuclear_norm,
    operator_norm,
    vector_norm,
)
from .operators import OperatorInstance, estimate_M, resolvent_factor

DEFAULT_TOL = 1e-10
COMMUTATION_TOL = 1e-10


@dataclass
class CalcResult:
    value: np.ndarray
    error: float
    nodes: int


def _require_trace_normalised(f: cbf.CbfSpec) -> None:
    if f.c != 0.0 or f.b != 0.0:
        raise HypothesisViolated(
            f"{f.name!r} has c={f.c}, b={f.b}; subtract the affine part first "
            "(f(A) = c I + b A + (f - c - b z)(A))"
        )


def _require_nonpositive(inst: OperatorInstance, label: str) -> None:
    if not inst.nonpositive:
        raise HypothesisViolated(f"operator {label} is not nonpositive")


def apply(f: cbf.CbfSpec, a: OperatorInstance, tol: float = DEFAULT_TOL) -> CalcResult:
    """f(A) as the measure integral of A R(t,A) = -I + t R(t,A)."""
    _require_trace_normalised(f)
    _require_nonpositive(a, "A")
    mu = f.require_measure()
    eye = identity(a.n)
    mat = a.matrix

    def integrand(t: float) -> np.ndarray:
        return t * resolvent_factor(mat, t).solve(eye) - eye

    value, err, nodes = mu.integrate(integrand, tol)
    return CalcResult(value=np.asarray(value), error=err, nodes=nodes)


def apply_diff(
    f: cbf.CbfSpec,
    a: OperatorInstance,
    b: OperatorInstance,
    tol: float = DEFAULT_TOL,
) -> CalcResult:
    """f(A) - f(B) as the integral of t R(t,A) (A-B) R(t,B) d mu(t)."""
    _require_trace_normalised(f)
    _require_nonpositive(a, "A")
    _require_nonpositive(b, "B")
    if a.n != b.n:
        raise ValueError("pair dimensions differ")
    mu = f.require_measure()
    eye = identity(a.n)
    v = a.matrix - b.matrix
    ma, mb = a.matrix, b.matrix

    def integrand(t: float) -> np.ndarray:
        rb = resolvent_factor(mb, t).solve(eye)
        return t * resolvent_factor(ma, t).solve(v @ rb)

    value, err, nodes = mu.integrate(integrand, tol)
    return CalcResult(value=np.asarray(value), error=err, nodes=nodes)


@dataclass
class BoundReport:
    """One verified inequality: lhs <= rhs up to the recorded slack."""

    name: str
    lhs: float
    rhs: float
    passed: bool
    slack: float
    details: dict = field(default_factory=dict)


def _passes(lhs: float, rhs: float, slack: float) -> bool:
    return lhs <= rhs + slack * (1.0 + abs(rhs))


def check_bound_31(
    f: cbf.CbfSpec,
    a: OperatorInstance,
    b: OperatorInstance,
    tol: float = DEFAULT_TOL,
    slack: float = 1e-9,
) -> BoundReport:
    """||f(A)-f(B)|| <= -(M_A + M_B + M_A M_B) f(-||A-B||)."""
    diff = apply_diff(f, a, b, tol)
    lhs = operator_norm(diff.value, a.norm)
    dn = operator_norm(a.matrix - b.matrix, a.norm)
    m_a = estimate_M(a, "nonpositive")
    m_b = estimate_M(b, "nonpositive")
    rhs = -(m_a + m_b + m_a * m_b) * cbf.evaluate(f, -dn).real
    return BoundReport(
        name="operator_norm_difference",
        lhs=lhs,
        rhs=rhs,
        passed=_passes(lhs, rhs, slack),
        slack=slack,
        details={"m_a": m_a, "m_b": m_b, "perturbation_norm": dn},
    )


def check_bound_36(
    f: cbf.CbfSpec,
    a: OperatorInstance,
    b: OperatorInstance,
    tol: float = DEFAULT_TOL,
    slack: float = 1e-9,
) -> BoundReport:
    """||f(A)-f(B)||_nuclear <= M_A M_B f'(0-) ||A-B||_nuclear (l2 only)."""
    if a.norm != NormKind.L2:
        raise UnsupportedNorm("nuclear bound needs the l2 norm")
    slope = cbf.derivative_at_zero_minus(f)
    if slope is cbf.INFINITE:
        raise HypothesisViolated(f"{f.name!r} has infinite slope at 0-")
    diff = apply_diff(f, a, b, tol)
    lhs = nuclear_norm(diff.value)
    m_a = estimate_M(a, "nonpositive")
    m_b = estimate_M(b, "nonpositive")
    rhs = m_a * m_b * slope * nuclear_norm(a.matrix - b.matrix)
    return BoundReport(
        name="nuclear_norm_difference",
        lhs=lhs,
        rhs=rhs,
        passed=_passes(lhs, rhs, slack),
        slack=slack,
        details={"slope_at_zero": slope},
    )


def _unit_samples(n: int, norm: NormKind, count: int, seed: int = 0xA11) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    xs = [np.eye(n, dtype=complex)[:, j] for j in range(n)]
    while len(xs) < n + count:
        x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        xs.append(x / vector_norm(x, norm))
    return xs


def check_bound_34_35(
    f: cbf.CbfSpec,
    a: OperatorInstance,
    b: OperatorInstance | None = None,
    tol: float = DEFAULT_TOL,
    slack: float = 1e-9,
    n_samples: int = 8,
) -> list[BoundReport]:
    """Vectorwise bounds.

    With B: commuting-perturbation estimate ||(f(A)-f(B))x|| bounded through
    f(-||(A-B)x||) on unit vectors, after verifying that A-B commutes with
    the sampled resolvents of B.  Always: the two single-operator estimates
    through f(-||Ax||) and through the slope at 0-.
    """
    reports: list[BoundReport] = []
    xs = _unit_samples(a.n, a.norm, n_samples)
    m_a = estimate_M(a, "nonpositive")

    if b is not None:
        v = a.matrix - b.matrix
        eye = identity(a.n)
        for t in np.logspace(-3, 3, 15):
            rb = resolvent_factor(b.matrix, t).solve(eye)
            comm = operator_norm(v @ rb - rb @ v, a.norm)
            if comm > COMMUTATION_TOL:
                raise NotCommuting(f"||[A-B, R({t:g},B)]|| = {comm:.2e}")
        m_b = estimate_M(b, "nonpositive")
        const = m_a + m_b + m_a * m_b
        diff = apply_diff(f, a, b, tol).value
        worst = None
        ok = True
        for x in xs:
            lhs = vector_norm(diff @ x, a.norm)
            rhs = -const * cbf.evaluate(f, -vector_norm(v @ x, a.norm)).real
            ok &= _passes(lhs, rhs, slack)
            if worst is None or lhs - rhs > worst[0] - worst[1]:
                worst = (lhs, rhs)
        reports.append(
            BoundReport(
                name="commuting_vectorwise",
                lhs=worst[0],
                rhs=worst[1],
                passed=ok,
                slack=slack,
                details={"samples": len(xs)},
            )
        )

    fa = apply(f, a, tol).value
    worst = None
    ok = True
    for x in xs:
        lhs = vector_norm(fa @ x, a.norm)
        rhs = -(2 * m_a + 1) * cbf.evaluate(f, -vector_norm(a.matrix @ x, a.norm)).real
        ok &= _passes(lhs, rhs, slack)
        if worst is None or lhs - rhs > worst[0] - worst[1]:
            worst = (lhs, rhs)
    reports.append(
        BoundReport(
            name="single_operator_vectorwise",
            lhs=worst[0],
            rhs=worst[1],
            passed=ok,
            slack=slack,
            details={"samples": len(xs)},
        )
    )

    slope = cbf.derivative_at_zero_minus(f)
    if slope is not cbf.INFINITE:
        worst = None
        ok = True
        for x in xs:
            lhs = vector_norm(fa @ x, a.norm)
            rhs = (2 * m_a + 1) * slope * vector_norm(a.matrix @ x, a.norm)
            ok &= _passes(lhs, rhs, slack)
            if worst is None or lhs - rhs > worst[0] - worst[1]:
                worst = (lhs, rhs)
        reports.append(
            BoundReport(
                name="single_operator_slope",
                lhs=worst[0],
                rhs=worst[1],
                passed=ok,
                slack=slack,
                details={"slope_at_zero": slope},
            )
        )
    return reports


def check_commutator_38(
    f: cbf.CbfSpec,
    a: OperatorInstance,
    u: np.ndarray,
    tol: float = DEFAULT_TOL,
    slack: float = 1e-9,
) -> list[BoundReport]:
    """||[f(A), U]||_ideal <= M_A^2 f'(0-) ||[A, U]||_ideal.

    f(U A U^-1) is computed independently and compared against the conjugate
    of f(A), then the commutator inequality is checked in the operator norm
    and, for l2 instances, in the nuclear norm.
    """
    slope = cbf.derivative_at_zero_minus(f)
    if slope is cbf.INFINITE:
        raise HypothesisViolated(f"{f.name!r} has infinite slope at 0-")
    u = np.asarray(u, dtype=complex)
    u_inv = lu_factor(u).solve(identity(a.n))
    conj = OperatorInstance(u @ a.matrix @ u_inv, a.norm)
    fa = apply(f, a, tol).value
    f_conj = apply(f, conj, tol).value
    m_a = estimate_M(a, "nonpositive")

    comm_f = fa @ u - u @ fa
    comm_a = a.matrix @ u - u @ a.matrix
    reports = [
        BoundReport(
            name="commutator_operator_norm",
            lhs=operator_norm(comm_f, a.norm),
            rhs=m_a**2 * slope * operator_norm(comm_a, a.norm),
            passed=_passes(
                operator_norm(comm_f, a.norm),
                m_a**2 * slope * operator_norm(comm_a, a.norm),
                slack,
            ),
            slack=slack,
            details={
                "conjugation_mismatch": operator_norm(f_conj - u @ fa @ u_inv, a.norm)
            },
        )
    ]
    if a.norm == NormKind.L2:
        lhs = nuclear_norm(comm_f)
        rhs = m_a**2 * slope * nuclear_norm(comm_a)
        reports.append(
            BoundReport(
                name="commutator_nuclear_norm",
                lhs=lhs,
                rhs=rhs,
                passed=_passes(lhs, rhs, slack),
                slack=slack,
            )
        )
    return reports
