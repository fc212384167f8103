"""Negative complete Bernstein functions via their Stieltjes-type representation.

A function in this class is determined by constants c <= 0, b >= 0 and a
positive measure mu on (0, infinity) with integral of 1/(1+t) finite:

    f(z) = c + b*z + integral of z/(t - z) dmu(t),   z off (0, infinity).

The measure is represented closed-form: point masses, the logarithmic tail
density dt/t on [lam, infinity) (whose integral transform is
log(lam) - log(lam - z)), and fixed tabulated quadrature rules.  One catalog
entry (the slowly-growing counterexample ``remark43``) has no tractable
measure and is evaluation-only; operations that need mu reject it.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, MeasureUnavailable, QuadratureError, UnknownTail
from .quadrature import adaptive_interval


class _Infinity:
    """Tagged infinity for divergent measure integrals; never enters arithmetic."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "INFINITE"

    def __bool__(self) -> bool:
        return True


INFINITE = _Infinity()


def is_on_positive_axis(z: complex) -> bool:
    z = complex(z)
    return z.imag == 0.0 and z.real > 0.0


@dataclass(frozen=True)
class Atom:
    """Point mass w at position t > 0."""

    t: float
    w: float

    def __post_init__(self):
        if not (self.t > 0 and self.w > 0):
            raise ValueError("atoms need t > 0 and w > 0")


@dataclass(frozen=True)
class ReciprocalTail:
    """Density dt/t on [lam, infinity)."""

    lam: float

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("reciprocal tail needs lam > 0")


@dataclass(frozen=True)
class TabulatedDensity:
    """Fixed quadrature rule (nodes, weights) standing in for a density.

    ``support`` records the interval the rule was built for.  When the
    support touches 0 or is unbounded, the endpoint behaviour cannot be read
    off the finite rule, so it must be declared: ``zero_exponent`` a means
    the density behaves like t**(a-1) near 0, ``tail_exponent`` b means
    t**(b-1) near infinity (b < 1 keeps the defining integral finite).
    """

    nodes: tuple[float, ...]
    weights: tuple[float, ...]
    support: tuple[float, float] = (0.0, math.inf)
    zero_exponent: float | None = None
    tail_exponent: float | None = None

    def __post_init__(self):
        if len(self.nodes) != len(self.weights):
            raise ValueError("nodes/weights length mismatch")
        if any(t <= 0 for t in self.nodes):
            raise ValueError("tabulated nodes must be strictly positive")
        if any(w < 0 for w in self.weights):
            raise ValueError("tabulated weights must be nonnegative")
        lo, hi = self.support
        if not (0 <= lo < hi):
            raise ValueError("support must be an interval inside [0, inf)")
        if self.zero_exponent is not None and self.zero_exponent <= 0:
            raise ValueError("zero_exponent must be positive for a finite measure")
        if self.tail_exponent is not None and self.tail_exponent >= 1:
            raise ValueError("tail_exponent must be < 1 for a finite measure")


MeasurePiece = Atom | ReciprocalTail | TabulatedDensity


@dataclass(frozen=True)
class MeasureSpec:
    """Representing measure: atoms plus closed-form density pieces."""

    atoms: tuple[Atom, ...] = ()
    densities: tuple[ReciprocalTail | TabulatedDensity, ...] = ()

    def mass_over_1pt(self) -> float:
        """Integral of 1/(1+t) dmu; finite by construction, computed exactly."""
        total = sum(a.w / (1 + a.t) for a in self.atoms)
        for piece in self.densities:
            if isinstance(piece, ReciprocalTail):
                total += math.log((1 + piece.lam) / piece.lam)
            else:
                total += sum(w / (1 + t) for t, w in zip(piece.nodes, piece.weights))
        return total

    def integrate(self, fn: Callable[[float], complex | np.ndarray], tol: float):
        """Integrate fn against the measure.

        Atoms and tabulated rules are exact weighted sums; the reciprocal
        tail is mapped onto (0, 1] by t = lam/u (so dmu = du/u) and handled
        by adaptive quadrature.  fn(t)*t must stay bounded as t -> infinity
        for the mapped integrand to be regular; all resolvent integrands
        used in this package satisfy that.
        """
        value = None
        err = 0.0
        nodes = 0

        def acc(v):
            nonlocal value
            value = v if value is None else value + v

        for a in self.atoms:
            acc(fn(a.t) * a.w)
            nodes += 1
        for piece in self.densities:
            if isinstance(piece, ReciprocalTail):
                lam = piece.lam
                res = adaptive_interval(lambda u: fn(lam / u) / u, 0.0, 1.0, tol)
                acc(res.value)
                err += res.error
                nodes += res.nodes
            else:
                for t, w in zip(piece.nodes, piece.weights):
                    acc(fn(t) * w)
                    nodes += 1
        if value is None:
            raise QuadratureError("empty measure")
        return value, err, nodes


@dataclass(frozen=True)
class CbfSpec:
    """A negative complete Bernstein function.

    Either ``mu`` is present (quadrature-eligible) or the function is
    evaluation-only through ``pointwise``/``pointwise_derivative`` with its
    integrability classification declared in ``star_known``.
    """

    name: str
    c: float = 0.0
    b: float = 0.0
    mu: MeasureSpec | None = None
    pointwise: Callable[[complex], complex] | None = field(default=None, compare=False)
    pointwise_derivative: Callable[[complex], complex] | None = field(
        default=None, compare=False
    )
    star_known: bool | None = None

    def __post_init__(self):
        if self.c > 0:
            raise ValueError("c must be <= 0")
        if self.b < 0:
            raise ValueError("b must be >= 0")
        if self.mu is None and self.pointwise is None:
            raise ValueError("need a measure or a pointwise evaluator")

    @property
    def has_measure(self) -> bool:
        return self.mu is not None

    def require_measure(self) -> MeasureSpec:
        if self.mu is None:
            raise MeasureUnavailable(
                f"function {self.name!r} is evaluation-only; no representing measure"
            )
        return self.mu


def _check_domain(z: complex) -> complex:
    z = complex(z)
    if is_on_positive_axis(z):
        raise DomainError(f"z = {z} lies on the open positive real axis")
    return z


def evaluate(f: CbfSpec, z: complex) -> complex:
    """f(z) = c + b z + integral of z/(t-z) dmu(t)."""
    z = _check_domain(z)
    if f.mu is None:
        return complex(f.pointwise(z))
    total = f.c + f.b * z
    for a in f.mu.atoms:
        total += a.w * z / (a.t - z)
    for piece in f.mu.densities:
        if isinstance(piece, ReciprocalTail):
            if z != 0:
                total += cmath.log(piece.lam) - cmath.log(piece.lam - z)
        else:
            for t, w in zip(piece.nodes, piece.weights):
                total += w * z / (t - z)
    return complex(total)


def derivative(f: CbfSpec, z: complex) -> complex:
    """f'(z) = b + integral of t/(t-z)^2 dmu(t)."""
    z = _check_domain(z)
    if f.mu is None:
        if f.pointwise_derivative is None:
            raise MeasureUnavailable(f"no derivative available for {f.name!r}")
        return complex(f.pointwise_derivative(z))
    total = complex(f.b)
    for a in f.mu.atoms:
        total += a.w * a.t / (a.t - z) ** 2
    for piece in f.mu.densities:
        if isinstance(piece, ReciprocalTail):
            total += 1.0 / (piece.lam - z)
        else:
            for t, w in zip(piece.nodes, piece.weights):
                total += w * t / (t - z) ** 2
    return complex(total)


def derivative_at_zero_minus(f: CbfSpec) -> float | _Infinity:
    """Integral of dmu(t)/t, i.e. the one-sided derivative at 0; INFINITE if divergent."""
    if f.mu is None:
        return _pointwise_slope_at_zero(f)
    total = 0.0
    for a in f.mu.atoms:
        total += a.w / a.t
    for piece in f.mu.densities:
        if isinstance(piece, ReciprocalTail):
            total += 1.0 / piece.lam
        else:
            lo, _ = piece.support
            if lo == 0.0 and piece.zero_exponent is not None and piece.zero_exponent <= 1:
                return INFINITE
            total += sum(w / t for t, w in zip(piece.nodes, piece.weights))
    return total


def _pointwise_slope_at_zero(f: CbfSpec) -> float | _Infinity:
    # probe f(-h)/(-h); a divergent trend means the slope at 0- is infinite
    quotients = []
    for k in range(2, 11):
        h = 10.0 ** (-k)
        quotients.append(abs(complex(f.pointwise(-h)) / (-h)))
    tail = quotients[-4:]
    if all(b > a for a, b in zip(tail, tail[1:])) and tail[-1] > 100 * quotients[0]:
        return INFINITE
    return quotients[-1]


def condition_star(f: CbfSpec) -> bool:
    """Whether the integral of (2 t log t + pi)/(1+t^2) dmu(t) is finite.

    Atoms and compactly supported rules always qualify; the reciprocal tail
    contributes 2 log(t)/t^2 at infinity, which converges.  Tabulated pieces
    with unbounded support need a declared tail exponent.
    """
    if f.mu is None:
        if f.star_known is None:
            raise UnknownTail(f"{f.name!r}: no measure and no declared classification")
        return f.star_known
    for piece in f.mu.densities:
        if isinstance(piece, TabulatedDensity):
            _, hi = piece.support
            if math.isinf(hi) and piece.tail_exponent is None:
                raise UnknownTail(
                    f"{f.name!r}: tabulated piece has unbounded support with no tail exponent"
                )
            # declared tail t**(b-1), b < 1: (2 log t / t) * t**(b-1) integrable
    return True


def second_moment_decay(f: CbfSpec, r: float) -> float:
    """Integral of t/(t^2 + r^2) dmu(t): drives |f'| bounds away from the axis."""
    mu = f.require_measure()
    total = 0.0
    for a in mu.atoms:
        total += a.w * a.t / (a.t**2 + r**2)
    for piece in mu.densities:
        if isinstance(piece, ReciprocalTail):
            total += (math.pi / 2 - math.atan(piece.lam / r)) / r
        else:
            total += sum(w * t / (t**2 + r**2) for t, w in zip(piece.nodes, piece.weights))
    return total


# --------------------------------------------------------------------------
# catalog


def make_rational(atoms: Sequence[tuple[float, float]], name: str | None = None) -> CbfSpec:
    """Finite atomic measure: f(z) = sum of w_j z/(t_j - z)."""
    measure = MeasureSpec(atoms=tuple(Atom(t, w) for t, w in atoms))
    label = name or "rational:" + ";".join(f"{t:g},{w:g}" for t, w in atoms)
    return CbfSpec(name=label, mu=measure)


def make_psi(lam: float) -> CbfSpec:
    """psi_lam(z) = log(lam) - log(lam - z), measure dt/t on [lam, inf)."""
    return CbfSpec(name=f"psi:{lam:g}", mu=MeasureSpec(densities=(ReciprocalTail(lam),)))


def _remark43_value(z: complex) -> complex:
    z = complex(z)
    if z == 0:
        return 0.0 + 0.0j
    w = z + 1.0
    if abs(w) < 1e-4:
        # removable singularity of the defining quotient at z = -1
        return -0.5 + w / 3.0 + w * w / 24.0
    L = cmath.log(-z)
    return (z * L - z - 1.0) / (L * L)


def _remark43_derivative(z: complex) -> complex:
    z = complex(z)
    if z == 0:
        raise DomainError("derivative of remark43 is unbounded at 0")
    w = z + 1.0
    if abs(w) < 3e-3:
        return 1.0 / 3.0 + w / 12.0 + 7.0 * w * w / 120.0
    L = cmath.log(-z)
    return (L * L - 2.0 * L + 2.0 + 2.0 / z) / (L * L * L)


def make_remark43() -> CbfSpec:
    """Slowly growing counterexample (z log(-z) - z - 1)/log(-z)^2.

    Negative complete Bernstein with c = b = 0, but the side integrability
    condition on |f(-x)|/(1+x^2) fails (the function grows like x/log x), so
    contour trace formulas refuse it.  Its measure has no closed form here:
    evaluation-only.
    """
    return CbfSpec(
        name="remark43",
        pointwise=_remark43_value,
        pointwise_derivative=_remark43_derivative,
        star_known=False,
    )


def catalog() -> list[CbfSpec]:
    """Named function suite used by the verification harness."""
    return [
        make_rational([(1.0, 1.0)], name="rational_a"),
        make_rational([(2.0, 3.0)], name="rational_b"),
        make_rational([(0.5, 1.0), (4.0, 2.0)], name="rational_c"),
        make_psi(3.0),
        make_psi(10.0),
        make_remark43(),
    ]


def parse_function_spec(spec: str | dict) -> CbfSpec:
    """Parse 'rational:t1,w1;t2,w2', 'psi:LAM', 'remark43', or the JSON form."""
    if isinstance(spec, dict):
        atoms = tuple(Atom(float(a["t"]), float(a["w"])) for a in spec.get("atoms", []))
        densities = []
        for d in spec.get("densities", []):
            kind = d["kind"]
            if kind == "reciprocal_t_on_tail":
                densities.append(ReciprocalTail(float(d["lambda"])))
            elif kind == "generic_tabulated":
                densities.append(
                    TabulatedDensity(
                        nodes=tuple(float(t) for t in d["nodes"]),
                        weights=tuple(float(w) for w in d["weights"]),
                        support=tuple(d.get("support", (0.0, math.inf))),
                        zero_exponent=d.get("zero_exponent"),
                        tail_exponent=d.get("tail_exponent"),
                    )
                )
            else:
                raise ValueError(f"unknown density kind {kind!r}")
        return CbfSpec(
            name=spec.get("name", "custom"),
            c=float(spec.get("c", 0.0)),
            b=float(spec.get("b", 0.0)),
            mu=MeasureSpec(atoms=atoms, densities=tuple(densities)),
        )

    text = spec.strip()
    if text == "remark43":
        return make_remark43()
    if text.startswith("psi:"):
        return make_psi(float(text.split(":", 1)[1]))
    if text.startswith("rational:"):
        pairs = []
        for chunk in text.split(":", 1)[1].split(";"):
            t_str, w_str = chunk.split(",")
            pairs.append((float(t_str), float(w_str)))
        return make_rational(pairs)
    raise ValueError(f"cannot parse function spec {text!r}")


def function_spec_to_dict(f: CbfSpec) -> dict:
    """JSON form of a measure-backed function spec."""
    mu = f.require_measure()
    densities = []
    for piece in mu.densities:
        if isinstance(piece, ReciprocalTail):
            densities.append({"kind": "reciprocal_t_on_tail", "lambda": piece.lam})
        else:
            densities.append(
                {
                    "kind": "generic_tabulated",
                    "nodes": list(piece.nodes),
                    "weights": list(piece.weights),
                    "support": list(piece.support),
                    "zero_exponent": piece.zero_exponent,
                    "tail_exponent": piece.tail_exponent,
                }
            )
    return {
        "name": f.name,
        "c": f.c,
        "b": f.b,
        "atoms": [{"t": a.t, "w": a.w} for a in mu.atoms],
        "densities": densities,
    }
