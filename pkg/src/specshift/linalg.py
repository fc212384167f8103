"""Dense complex matrix kernel: LU solve/determinant, norms, traces.

Matrices are plain ``numpy.ndarray`` objects of dtype complex128, validated
square and finite on entry.  Everything here is sized for desk-scale work
(n <= 64); LU factorisation is delegated to LAPACK through scipy with an
explicit pivot-threshold check so near-singularity is a typed error rather
than a silent garbage result.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ConvergenceError, SingularMatrix, UnsupportedNorm

PIVOT_RTOL = 1e-13



class NormKind(str, enum.Enum):
    """Vector norm on C^n inducing the operator norm."""

    L1 = "l1"
    L2 = "l2"
    LINF = "linf"


def as_matrix(data) -> np.ndarray:
    """Validate and normalise to a square finite complex128 array."""
    a = np.asarray(data, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a.view(float))):
        raise ValueError("matrix has non-finite entries")
    return a


def identity(n: int) -> np.ndarray:
    return np.eye(n, dtype=complex)


@dataclass
class LUFactor:
    """Partial-pivoting LU factorisation of a nonsingular matrix."""

    lu: np.ndarray
    piv: np.ndarray
    perm_sign: int

    def solve(self, b: np.ndarray) -> np.ndarray:
        return scipy.linalg.lu_solve((self.lu, self.piv), b, check_finite=False)

    @property
    def det(self) -> complex:
        return self.perm_sign * complex(np.prod(np.diag(self.lu)))


def lu_factor(a: np.ndarray) -> LUFactor:
    """Factor ``a``; raises SingularMatrix when a pivot falls below threshold.

    Threshold: PIVOT_RTOL times the largest entry magnitude of ``a``.
    """
    a = np.ascontiguousarray(a, dtype=complex)
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # LAPACK warns on exact zero pivots
        lu, piv = scipy.linalg.lu_factor(a, check_finite=False)
    pivots = np.abs(np.diag(lu))
    if scale == 0.0 or np.min(pivots) <= PIVOT_RTOL * scale:
        raise SingularMatrix(
            f"pivot {np.min(pivots):.3e} below threshold {PIVOT_RTOL * scale:.3e}"
        )
    sign = 1 if np.count_nonzero(piv != np.arange(len(piv))) % 2 == 0 else -1
    return LUFactor(lu=lu, piv=piv, perm_sign=sign)


def lu_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve A X = B with partial pivoting."""
    return lu_factor(a).solve(np.asarray(b, dtype=complex))


def det(a: np.ndarray) -> complex:
    """Determinant via LU with permutation-sign tracking; 0 for singular input."""
    try:
        return lu_factor(a).det
    except SingularMatrix:
        return 0.0 + 0.0j


def trace(a: np.ndarray) -> complex:
    return complex(np.trace(a))


def vector_norm(x: np.ndarray, kind: NormKind) -> float:
    x = np.asarray(x)
    if kind == NormKind.L1:
        return float(np.sum(np.abs(x)))
    if kind == NormKind.L2:
        return float(np.linalg.norm(x))
    return float(np.max(np.abs(x))) if x.size else 0.0


def dual_norm_kind(kind: NormKind) -> NormKind:
    """Norm of the dual space (covectors)."""
    if kind == NormKind.L1:
        return NormKind.LINF
    if kind == NormKind.LINF:
        return NormKind.L1
    return NormKind.L2


def operator_norm(a: np.ndarray, kind: NormKind) -> float:
    """Induced operator norm.

    l1 and linf are the exact column/row sums; l2 is the largest singular
    value.  Resolvent profiles produce tightly clustered singular values
    (all of them coalesce as t grows), which stalls dominant-eigenvalue
    iteration on A^H A far past any sane iteration budget, so the l2 branch
    is computed by the exact dense SVD.
    """
    a = np.asarray(a, dtype=complex)
    if kind == NormKind.L1:
        return float(np.max(np.sum(np.abs(a), axis=0))) if a.size else 0.0
    if kind == NormKind.LINF:
        return float(np.max(np.sum(np.abs(a), axis=1))) if a.size else 0.0
    if a.size == 0:
        return 0.0
    try:
        return float(np.linalg.svd(a, compute_uv=False)[0])
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK breakdown
        raise ConvergenceError(f"SVD did not converge: {exc}") from exc


def singular_values(a: np.ndarray) -> np.ndarray:
    return np.linalg.svd(np.asarray(a, dtype=complex), compute_uv=False)


def nuclear_norm(a: np.ndarray, kind: NormKind = NormKind.L2) -> float:
    """Sum of singular values.  Only defined for the Euclidean norm."""
    if kind != NormKind.L2:
        raise UnsupportedNorm("nuclear norm is only available for the l2 norm")
    return float(np.sum(singular_values(a)))


def max_abs(a: np.ndarray) -> float:
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def matrix_to_dict(a: np.ndarray) -> dict:
    """Matrix wire format: {"n": ..., "re": [[...]], "im": [[...]]}."""
    a = as_matrix(a)
    return {"n": a.shape[0], "re": a.real.tolist(), "im": a.imag.tolist()}


def matrix_from_dict(d: dict) -> np.ndarray:
    n = int(d["n"])
    re = np.asarray(d["re"], dtype=float)
    im = np.asarray(d.get("im", np.zeros((n, n))), dtype=float)
    if re.shape != (n, n) or im.shape != (n, n):
        raise ValueError("matrix payload shape mismatch")
    return as_matrix(re + 1j * im)
