"""Adaptive Gauss-Legendre quadrature for scalar, matrix and path integrands.

Panels carry 16 nodes; a panel is accepted when bisecting it changes the
estimate by less than its share of the absolute tolerance, and recursion is
capped at depth 40 so near-singular integrands fail loudly instead of
spinning.  A cumulative integration matrix for the node set supports
single-sweep antiderivatives along contours.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from numpy.polynomial import legendre as npleg

from .errors import QuadratureError

PANEL_NODES = 16
MAX_DEPTH = 40


@lru_cache(maxsize=8)
def gl_rule(m: int = PANEL_NODES) -> tuple[np.ndarray, np.ndarray]:
    x, w = npleg.leggauss(m)
    return x, w


@lru_cache(maxsize=8)
def gl_cumulative_matrix(m: int = PANEL_NODES) -> np.ndarray:
    """Matrix K with (K @ f(x_j))_i = integral of the interpolant from -1 to x_i.

    Built in the Legendre basis: antiderivatives of P_k vanish at -1, so the
    map values -> coefficients -> cumulative integrals is exact for the
    degree-(m-1) interpolant.
    """
    x, _ = gl_rule(m)
    vand = npleg.legvander(x, m - 1)
    anti = np.zeros((m, m))
    # column k holds the antiderivative of P_k evaluated at the nodes
    anti[:, 0] = x + 1.0
    pk = [npleg.Legendre.basis(k)(x) for k in range(m + 1)]
    for k in range(1, m):
        anti[:, k] = (pk[k + 1] - pk[k - 1]) / (2 * k + 1)
    return anti @ np.linalg.inv(vand)


@dataclass
class QuadratureResult:
    value: complex | np.ndarray
    error: float
    nodes: int

    def __iter__(self):
        yield self.value
        yield self.error
        yield self.nodes


def _norm_of(v) -> float:
    if isinstance(v, np.ndarray):
        return float(np.max(np.abs(v))) if v.size else 0.0
    return abs(v)


def _panel(f: Callable, a: float, b: float):
    x, w = gl_rule()
    h = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    vals = [f(mid + h * xi) for xi in x]
    acc = vals[0] * (w[0] * h)
    for wi, vi in zip(w[1:], vals[1:]):
        acc = acc + vi * (wi * h)
    return acc


def adaptive_interval(
    f: Callable[[float], complex | np.ndarray],
    a: float,
    b: float,
    tol: float,
    max_depth: int = MAX_DEPTH,
) -> QuadratureResult:
    """Integrate f over [a, b] to absolute tolerance ``tol``.

    Works for complex- or array-valued integrands; the error functional is
    the max-abs entry.  Raises QuadratureError when the depth cap is hit
    before the local tolerance is met.
    """
    if b == a:
        return QuadratureResult(0.0 + 0.0j, 0.0, 0)
    total_len = abs(b - a)
    nodes = 0

    def recurse(lo: float, hi: float, coarse, depth: int):
        nonlocal nodes
        mid = 0.5 * (lo + hi)
        left = _panel(f, lo, mid)
        right = _panel(f, mid, hi)
        nodes += 2 * PANEL_NODES
        fine = left + right
        err = _norm_of(fine - coarse)
        local_tol = tol * max(abs(hi - lo) / total_len, 1e-3)
        if err <= local_tol:
            return fine, err
        if depth >= max_depth:
            raise QuadratureError(
                f"panel [{lo:g}, {hi:g}] still at error {err:.3e} at depth {depth}"
            )
        lv, le = recurse(lo, mid, left, depth + 1)
        rv, re = recurse(mid, hi, right, depth + 1)
        return lv + rv, le + re

    coarse = _panel(f, a, b)
    nodes += PANEL_NODES
    value, err = recurse(a, b, coarse, 1)
    return QuadratureResult(value, err, nodes)


def adaptive_segment(
    f: Callable[[complex], complex | np.ndarray],
    z0: complex,
    z1: complex,
    tol: float,
    max_depth: int = MAX_DEPTH,
) -> QuadratureResult:
    """Integrate f(z) dz along the straight segment from z0 to z1."""
    dz = z1 - z0
    return adaptive_interval(lambda s: f(z0 + s * dz) * dz, 0.0, 1.0, tol, max_depth)


def adaptive_log_ray(
    f: Callable[[complex], complex | np.ndarray],
    direction: complex,
    r0: float,
    r1: float,
    tol: float,
    max_depth: int = MAX_DEPTH,
) -> QuadratureResult:
    """Integrate f(z) dz along r*direction for r in [r0, r1], log-parameterised.

    Geometric parameterisation keeps wide radial spans cheap; r0 must be
    positive.  Orientation follows the sign of (r1 - r0).
    """
    if r0 <= 0 or r1 <= 0:
        raise ValueError("log-ray quadrature needs strictly positive radii")
    u0, u1 = np.log(r0), np.log(r1)
    return adaptive_interval(
        lambda u: f(np.exp(u) * direction) * (np.exp(u) * direction),
        u0,
        u1,
        tol,
        max_depth,
    )
