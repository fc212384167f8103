"""Classification of matrices as nonpositive/negative operators and sector geometry.

A matrix A is *nonpositive* when (0, inf) lies in its resolvent set with
sup_t t ||R(t,A)|| finite, and *negative* when additionally 0 is a regular
point and sup_t (1+t) ||R(t,A)|| is finite.  Both suprema are estimated by a
log-spaced grid refined with golden-section search; the known limit value
||I|| = 1 at t -> infinity (and ||A^-1|| at t -> 0 for the negative mode) is
included exactly so flat profiles are not under-reported.

The sector machinery picks and validates, by dense sampling, a region
S_theta U B_delta(0) on which the resolvents of a pair satisfy the uniform
decay bound that all contour integrals downstream rely on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .errors import NoSector, SingularMatrix, SpectrumHit, Unbounded
from .linalg import LUFactor, NormKind, as_matrix, identity, lu_factor, operator_norm

T_GRID = np.logspace(-6.0, 8.0, 200)
VALUE_CAP = 1e12
PROJECTION_DECADES = 12.0
GOLDEN_REL_WIDTH = 1e-6
SECTOR_MAX_SHRINKS = 20
SECTOR_SAMPLE_CAP = 1e10
R_VALIDATE = 1e6
DEFAULT_R_TRUNC = 1e4


def resolvent_factor(a: np.ndarray, z: complex) -> LUFactor:
    """LU factorisation of (zI - A); SpectrumHit when that matrix is singular."""
    n = a.shape[0]
    try:
        return lu_factor(z * identity(n) - a)
    except SingularMatrix as exc:
        raise SpectrumHit(f"z = {z} is a spectral point: {exc}") from exc


def _grid_profile(a: np.ndarray, norm: NormKind) -> np.ndarray | None:
    """||R(t,A)|| on T_GRID, or None if some (tI - A) is singular."""
    n = a.shape[0]
    eye = identity(n)
    out = np.empty(len(T_GRID))
    for i, t in enumerate(T_GRID):
        try:
            fac = lu_factor(t * eye - a)
        except SingularMatrix:
            return None
        out[i] = operator_norm(fac.solve(eye), norm)
    return out


def _diverges_at_end(ts: np.ndarray, vals: np.ndarray, end: str) -> bool:
    """Monotone growth toward a grid end whose power-law projection passes the cap."""
    k = 6
    if end == "low":
        seg_t, seg_v = ts[:k], vals[:k]
        if not np.all(np.diff(seg_v) < 0):  # increasing toward t -> 0
            return False
        slope = (math.log(seg_v[0]) - math.log(seg_v[-1])) / (
            math.log(seg_t[0]) - math.log(seg_t[-1])
        )
        proj = seg_v[0] * 10.0 ** (-PROJECTION_DECADES * slope)
    else:
        seg_t, seg_v = ts[-k:], vals[-k:]
        if not np.all(np.diff(seg_v) > 0):  # increasing toward t -> inf
            return False
        slope = (math.log(seg_v[-1]) - math.log(seg_v[0])) / (
            math.log(seg_t[-1]) - math.log(seg_t[0])
        )
        proj = seg_v[-1] * 10.0 ** (PROJECTION_DECADES * slope)
    return proj > VALUE_CAP


def _golden_refine(g: Callable[[float], float], lo: float, hi: float) -> float:
    """Golden-section maximum of g over [lo, hi] in log coordinates.

    Runs past the reporting accuracy down to machine width so that a pole
    hiding between grid nodes keeps growing until it crosses the cap; a
    smooth maximum plateaus long before that.
    """
    def safe_g(t: float) -> float:
        try:
            return g(t)
        except SingularMatrix:
            return math.inf

    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = math.log(lo), math.log(hi)
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = safe_g(math.exp(c)), safe_g(math.exp(d))
    best = max(fc, fd)
    while (b - a) > 5e-15:
        if best > VALUE_CAP:
            return math.inf
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = safe_g(math.exp(c))
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = safe_g(math.exp(d))
        best = max(best, fc, fd)
    return best


def _estimate_sup(ts, vals, g, extra=()):
    """Supremum of a weighted resolvent-norm profile, or None if it diverges.

    Refines the three largest local maxima of the grid profile with
    golden-section search (a refined value passing the cap means a spectral
    point hides between grid nodes), checks for monotone divergence at the
    grid ends, and mixes in exactly known limit values (``extra``).
    """
    if np.max(vals) > VALUE_CAP:
        return None
    if _diverges_at_end(ts, vals, "low") or _diverges_at_end(ts, vals, "high"):
        return None
    interior = np.where(
        (vals >= np.roll(vals, 1)) & (vals >= np.roll(vals, -1))
    )[0]
    interior = interior[(interior > 0) & (interior < len(vals) - 1)]
    candidates = list(interior[np.argsort(vals[interior])][::-1][:3])
    candidates.append(int(np.argmax(vals)))
    best = float(np.max(vals))
    for i in set(candidates):
        lo = ts[max(i - 1, 0)]
        hi = ts[min(i + 1, len(ts) - 1)]
        refined = _golden_refine(g, lo, hi)
        if refined > VALUE_CAP:
            return None
        best = max(best, refined)
    return max(best, *extra) if extra else best


class OperatorInstance:
    """A dense complex matrix with its norm and cached operator classification.

    Classification runs once at construction; instances are read-only
    afterwards and safe to share.
    """

    def __init__(self, matrix, norm: NormKind = NormKind.L2):
        self.matrix = as_matrix(matrix)
        self.norm = NormKind(norm)
        self.n = self.matrix.shape[0]

        self.inv_norm: float | None = None
        try:
            fac = lu_factor(self.matrix)
            self.inv_norm = operator_norm(fac.solve(identity(self.n)), self.norm)
        except SingularMatrix:
            pass

        rnorms = _grid_profile(self.matrix, self.norm)
        self.nonpositive = False
        self.negative = False
        self.m_nonpositive: float | None = None
        self.m_negative: float | None = None
        if rnorms is None:
            return

        eye = identity(self.n)

        def rnorm_at(t: float) -> float:
            return operator_norm(lu_factor(t * eye - self.matrix).solve(eye), self.norm)

        self.m_nonpositive = _estimate_sup(
            T_GRID, T_GRID * rnorms, lambda t: t * rnorm_at(t), extra=(1.0,)
        )
        self.nonpositive = self.m_nonpositive is not None

        if self.nonpositive and self.inv_norm is not None:
            self.m_negative = _estimate_sup(
                T_GRID,
                (1.0 + T_GRID) * rnorms,
                lambda t: (1.0 + t) * rnorm_at(t),
                extra=(1.0, self.inv_norm),
            )
            self.negative = self.m_negative is not None

    def __repr__(self) -> str:
        kind = "negative" if self.negative else ("nonpositive" if self.nonpositive else "unclassified")
        return f"OperatorInstance(n={self.n}, norm={self.norm.value}, {kind})"


def resolvent(inst: OperatorInstance, z: complex) -> np.ndarray:
    """(zI - A)^-1."""
    return resolvent_factor(inst.matrix, z).solve(identity(inst.n))


def estimate_M(inst: OperatorInstance, mode: str = "nonpositive") -> float:
    """Cached supremum estimate; raises Unbounded when the profile diverges."""
    if mode == "nonpositive":
        if inst.m_nonpositive is None:
            raise Unbounded("sup_t t||R(t,A)|| diverges: not a nonpositive operator")
        return inst.m_nonpositive
    if mode == "negative":
        if inst.m_negative is None:
            raise Unbounded("sup_t (1+t)||R(t,A)|| diverges or 0 is spectral")
        return inst.m_negative
    raise ValueError(f"unknown mode {mode!r}")


@dataclass(frozen=True)
class SectorGeometry:
    """Validated region S_theta U B_delta(0) for a pair, with measured constants."""

    theta: float
    delta: float
    m_prime: float
    m_prime_a: float
    m_prime_b: float
    mode: str  # "negative" or "nonpositive"
    norm: NormKind
    r_trunc: float = DEFAULT_R_TRUNC

    def contains(self, z: complex, slack: float = 1e-12) -> bool:
        z = complex(z)
        if abs(z) <= self.delta * (1 + slack) + slack:
            return True
        if z == 0:
            return self.delta == 0.0 or self.delta > 0
        return abs(math.atan2(z.imag, z.real)) <= self.theta * (1 + slack) + slack

    def with_r_trunc(self, r: float) -> "SectorGeometry":
        return replace(self, r_trunc=r)

    def swapped(self) -> "SectorGeometry":
        """Same region with the roles of the pair exchanged."""
        return replace(self, m_prime_a=self.m_prime_b, m_prime_b=self.m_prime_a)


@dataclass(frozen=True)
class RaySegment:
    angle: float
    r_from: float
    r_to: float


@dataclass(frozen=True)
class ArcSegment:
    radius: float
    angle_from: float
    angle_to: float


@dataclass(frozen=True)
class ContourPath:
    """Positively oriented truncated boundary of S_theta U B_delta(0).

    Traversal: upper ray inward from r_trunc to the disc junction (or the
    vertex), then the arc through -delta counterclockwise, then the lower
    ray back out.  The omitted closing piece at radius r_trunc is covered by
    the tail estimates of the integrals that consume this path.
    """

    segments: tuple
    geometry: SectorGeometry


def contour(geom: SectorGeometry) -> ContourPath:
    th, de, rt = geom.theta, geom.delta, geom.r_trunc
    segs: list = [RaySegment(angle=+th, r_from=rt, r_to=de)]
    if de > 0:
        segs.append(ArcSegment(radius=de, angle_from=th, angle_to=2 * math.pi - th))
    segs.append(RaySegment(angle=-th, r_from=de, r_to=rt))
    return ContourPath(segments=tuple(segs), geometry=geom)


def _sector_samples(theta: float, delta: float, r_hi: float) -> list[complex]:
    """Sample points covering the boundary and interior of the region."""
    pts: list[complex] = []
    r_lo = max(delta, 1e-6)
    radii = np.geomspace(r_lo, r_hi, 60)
    for ang in (theta, -theta, theta / 2, -theta / 2, 0.0):
        pts.extend(r * complex(math.cos(ang), math.sin(ang)) for r in radii)
    if delta > 0:
        for frac in (1.0, 0.6, 0.3):
            for ang in np.linspace(theta, 2 * math.pi - theta, 24):
                pts.append(frac * delta * complex(math.cos(ang), math.sin(ang)))
        pts.append(0.0 + 0.0j)
    return pts


def validate_sector(
    a: OperatorInstance,
    b: OperatorInstance,
    theta: float,
    delta: float,
    mode: str,
) -> SectorGeometry | None:
    """Measure the decay constants of both resolvents on a candidate region.

    Samples boundary and interior of S_theta U B_delta(0); the weight is
    (1+|z|) in negative mode and |z| in nonpositive mode (the decay each
    class actually provides near the vertex).  Returns None when a sample
    hits the spectrum or exceeds the cap, meaning the candidate region
    intrudes on the spectrum.
    """
    eye = identity(a.n)
    negative_weight = mode == "negative"

    def weighted_norm(mat: np.ndarray, z: complex) -> float:
        r = lu_factor(z * eye - mat).solve(eye)
        w = 1.0 + abs(z) if negative_weight else max(abs(z), 1e-300)
        return w * operator_norm(r, a.norm)

    points = _sector_samples(theta, delta, R_VALIDATE)
    sup_a = sup_b = 1.0  # the t -> inf limit of the weighted norm is exactly 1
    for z in points:
        try:
            sup_a = max(sup_a, weighted_norm(a.matrix, z))
            sup_b = max(sup_b, weighted_norm(b.matrix, z))
        except SingularMatrix:
            return None
        if max(sup_a, sup_b) > SECTOR_SAMPLE_CAP:
            return None
    return SectorGeometry(
        theta=theta,
        delta=delta,
        m_prime=max(sup_a, sup_b),
        m_prime_a=sup_a,
        m_prime_b=sup_b,
        mode=mode,
        norm=a.norm,
    )


def build_sector(a: OperatorInstance, b: OperatorInstance) -> SectorGeometry:
    """Pick theta (and delta for negative pairs) and validate the decay bound.

    Starts from theta = 0.9 * arcsin(1/(2 max(M_A, M_B))) and delta at half
    the certified invertibility radius around the origin (the reciprocal of
    ||A^-1||, which lower-bounds the distance from 0 to the spectrum), then
    shrinks on any sampled violation, at most 20 times.
    """
    if a.norm != b.norm:
        raise ValueError("pair must share a norm")
    if not (a.nonpositive and b.nonpositive):
        raise Unbounded("both operators must be at least nonpositive")
    negative_pair = a.negative and b.negative
    mode = "negative" if negative_pair else "nonpositive"
    m = max(estimate_M(a, mode), estimate_M(b, mode))
    theta = 0.9 * math.asin(1.0 / (2.0 * m))
    if negative_pair:
        delta = 0.5 * min(1.0 / a.inv_norm, 1.0 / b.inv_norm)
    else:
        delta = 0.0

    for shrinks in range(SECTOR_MAX_SHRINKS + 1):
        geom = validate_sector(a, b, theta, delta, mode)
        if geom is not None:
            return geom
        theta *= 0.5
        if shrinks >= 10 and delta > 0:
            delta *= 0.5
    raise NoSector(f"no validated sector after {SECTOR_MAX_SHRINKS} shrinks")


@dataclass(frozen=True)
class AdmissibleShift:
    admissible: bool
    m_prime_shifted: float | None


def shift_is_admissible(inst: OperatorInstance, v: np.ndarray, m_prime: float) -> AdmissibleShift:
    """Whether A + V stays negative for the sector constant m_prime of A.

    Sufficient condition ||V|| < 1/M'; the shifted constant is then
    M'/(1 - M' ||V||).
    """
    if not inst.negative:
        raise Unbounded("admissibility is defined for negative operators")
    vnorm = operator_norm(as_matrix(v), inst.norm)
    if vnorm * m_prime < 1.0:
        return AdmissibleShift(True, m_prime / (1.0 - m_prime * vnorm))
    return AdmissibleShift(False, None)
