"""Seeded ground-truth instances: similarity transforms of chosen diagonal spectra.

Spectra are always *chosen*, never computed, so every downstream check
(trace differences, shift functions, determinants) has an independent
closed-form answer.  The similarity factor is a Gram-Schmidt unitary times a
diagonal scaling, which makes the condition number exactly the scaling
spread and hence trivially capped.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

from . import cbf
from .errors import GenerationFailed, SpectrumHit
from .linalg import NormKind, det, identity, lu_factor, singular_values
from .operators import OperatorInstance
from .shift import RankOneDecomposition, RankOneTerm

MAX_RETRIES = 100


def random_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    """Gram-Schmidt orthonormalisation of a complex Gaussian matrix."""
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q = np.zeros_like(g)
    for j in range(n):
        v = g[:, j].copy()
        for i in range(j):
            v -= np.vdot(q[:, i], g[:, j]) * q[:, i]
        norm = np.linalg.norm(v)
        if norm < 1e-12:
            raise GenerationFailed("Gram-Schmidt breakdown")
        q[:, j] = v / norm
    return q


@dataclass
class OracleInstance:
    """Pair (A, B) = (P D_A P^-1, P D_B P^-1) with all ground truth attached."""

    seed: int
    n: int
    mode: str
    norm: NormKind
    p: np.ndarray
    p_inv: np.ndarray
    d_a: np.ndarray
    d_b: np.ndarray
    a: np.ndarray
    b: np.ndarray
    decomposition: list[RankOneTerm] = field(default_factory=list)

    @functools.cached_property
    def a_inst(self) -> OperatorInstance:
        return OperatorInstance(self.a, self.norm)

    @functools.cached_property
    def b_inst(self) -> OperatorInstance:
        return OperatorInstance(self.b, self.norm)

    @property
    def rank(self) -> int:
        return int(np.count_nonzero(self.d_a != self.d_b))

    def measured_rank(self, tol: float = 1e-9) -> int:
        s = singular_values(self.a - self.b)
        return int(np.count_nonzero(s > tol * max(1.0, s[0] if len(s) else 0.0)))

    def rank_one_decomposition(self) -> RankOneDecomposition:
        return RankOneDecomposition(self.decomposition)


def generate(
    seed: int,
    n: int,
    mode: str = "negative",
    rank_k: int = 1,
    cond_cap: float = 50.0,
    norm: NormKind = NormKind.L2,
    complex_pairs: bool = False,
    force_zero: str | None = None,
) -> OracleInstance:
    """Deterministic oracle pair with rank(A - B) <= rank_k and cond(P) <= cond_cap.

    ``mode`` is "negative" (spectra in [-10, -0.1]) or "nonpositive"
    ([-10, 0], where ``force_zero`` can pin an exact 0 into one or both
    spectra).  ``complex_pairs`` replaces some real eigenvalues by conjugate
    pairs in the left sector of half-angle pi/4.
    """
    if n > 64:
        raise GenerationFailed("instances are desk-scale: n <= 64")
    if rank_k > n:
        raise GenerationFailed("rank_k must not exceed n")
    if mode not in ("negative", "nonpositive"):
        raise GenerationFailed(f"unknown mode {mode!r}")
    rng = np.random.default_rng(seed)

    for _ in range(MAX_RETRIES):
        q = random_unitary(rng, n)
        if cond_cap <= 1.0:
            scale = np.ones(n)
        else:
            half = 0.5 * math.log(cond_cap)
            scale = np.exp(rng.uniform(-half, half, n))
        p = q @ np.diag(scale)
        s = singular_values(p)
        if s[-1] <= 0 or s[0] / s[-1] > cond_cap * (1 + 1e-9):
            continue

        d_a = _draw_spectrum(rng, n, mode, complex_pairs)
        if force_zero in ("a", "both") and mode == "nonpositive":
            d_a[0] = 0.0
        d_b = d_a.copy()
        idx = rng.choice(n, size=rank_k, replace=False) if rank_k else np.array([], int)
        start = 0
        if force_zero is not None and mode == "nonpositive":
            if force_zero == "both":
                d_b[0] = 0.0
                idx = idx[idx != 0]
            elif force_zero == "b":
                d_b[0] = 0.0
                d_a[0] = rng.uniform(-10.0, -0.1)
                idx = idx[idx != 0]
                start = 1  # slot 0 already differs
        for j in idx[: max(rank_k - start, 0)]:
            lo = -10.0
            hi = -0.1 if mode == "negative" else 0.0
            new = rng.uniform(lo, hi)
            while abs(new - d_a[j]) < 0.05:
                new = rng.uniform(lo, hi)
            d_b[j] = new

        p_inv = lu_factor(p).solve(identity(n))
        a = p @ np.diag(d_a) @ p_inv
        b = p @ np.diag(d_b) @ p_inv
        terms = [
            RankOneTerm(ell=p_inv[j, :].copy(), v=(d_a[j] - d_b[j]) * p[:, j].copy())
            for j in range(n)
            if d_a[j] != d_b[j]
        ]
        return OracleInstance(
            seed=seed, n=n, mode=mode, norm=norm,
            p=p, p_inv=p_inv, d_a=d_a, d_b=d_b, a=a, b=b,
            decomposition=terms,
        )
    raise GenerationFailed(f"no admissible instance after {MAX_RETRIES} retries")


def _draw_spectrum(rng, n, mode, complex_pairs):
    hi = -0.1 if mode == "negative" else 0.0
    d = rng.uniform(-10.0, hi, n).astype(complex)
    if complex_pairs and n >= 2:
        npairs = int(rng.integers(1, n // 2 + 1))
        for k in range(npairs):
            r = rng.uniform(0.3, 10.0)
            ang = rng.uniform(3 * math.pi / 4 + 0.05, math.pi - 0.05)
            d[2 * k] = r * complex(math.cos(ang), math.sin(ang))
            d[2 * k + 1] = np.conj(d[2 * k])
    return d


def oracle_trace_diff(inst: OracleInstance, f: cbf.CbfSpec) -> complex:
    """Sum of f over spectrum(A) minus sum over spectrum(B)."""
    total = 0.0 + 0.0j
    for d in inst.d_a:
        total += cbf.evaluate(f, complex(d))
    for d in inst.d_b:
        total -= cbf.evaluate(f, complex(d))
    return total


def oracle_xi(inst: OracleInstance, z: complex) -> complex:
    """log det(zI-A) - log det(zI-B) with the branch continuous from +infinity.

    Valid where every z - eigenvalue stays in the open right half-plane
    union the upper/lower half-planes reached without crossing (-inf, 0];
    all instance families here keep Re(z - d) > 0 on the validated region,
    so principal logs are the continuous branch.
    """
    total = 0.0 + 0.0j
    for d in inst.d_a:
        total += np.log(z - d)
    for d in inst.d_b:
        total -= np.log(z - d)
    return complex(total)


def oracle_delta(inst: OracleInstance, z: complex) -> complex:
    """det(zI - A)/det(zI - B) by LU."""
    n = inst.n
    den = det(z * identity(n) - inst.b)
    if den == 0:
        raise SpectrumHit(f"z = {z} is an eigenvalue of B")
    num = det(z * identity(n) - inst.a)
    return num / den
