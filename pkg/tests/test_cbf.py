import cmath
import math

import numpy as np
import pytest
from scipy.integrate import quad

from specshift import cbf
from specshift.cbf import (
    INFINITE,
    CbfSpec,
    MeasureSpec,
    TabulatedDensity,
    catalog,
    condition_star,
    derivative,
    derivative_at_zero_minus,
    evaluate,
    function_spec_to_dict,
    make_psi,
    make_rational,
    make_remark43,
    parse_function_spec,
)
from specshift.errors import DomainError, MeasureUnavailable, UnknownTail

ATOM = make_rational([(1.0, 1.0)], name="atom11")
PSI2 = make_psi(2.0)
R43 = make_remark43()


def test_eval_atom_examples():
    assert evaluate(ATOM, -1.0) == pytest.approx(-0.5)
    assert evaluate(ATOM, 0.0) == pytest.approx(0.0)


def test_eval_psi_closed_form():
    # psi_2(-2) = log 2 - log 4
    assert evaluate(PSI2, -2.0) == pytest.approx(-0.6931471805599453, abs=1e-14)


def test_eval_psi_matches_quadrature_oracle():
    # independent oracle: numeric integral of z/((t-z) t) over [2, inf)
    for z in (-2.0, -0.7, 1.5j, -3.0 + 2.0j):
        ref_re = quad(lambda t: (z / ((t - z) * t)).real, 2.0, np.inf, limit=400)[0]
        ref_im = quad(lambda t: (z / ((t - z) * t)).imag, 2.0, np.inf, limit=400)[0]
        assert evaluate(PSI2, z) == pytest.approx(ref_re + 1j * ref_im, abs=1e-9)


def test_eval_rejects_positive_axis():
    with pytest.raises(DomainError):
        evaluate(ATOM, 0.5)
    with pytest.raises(DomainError):
        derivative(PSI2, 3.0)


def test_derivative_examples():
    assert derivative(ATOM, -1.0) == pytest.approx(0.25)
    assert derivative(ATOM, 0.0) == pytest.approx(1.0)
    assert derivative(PSI2, 0.0) == pytest.approx(0.5)


def test_derivative_matches_central_differences():
    rng = np.random.default_rng(3)
    funcs = [f for f in catalog() if f.has_measure]
    pts = []
    while len(pts) < 20:
        z = complex(rng.uniform(-5, 5), rng.uniform(-5, 5))
        if abs(z.imag) > 0.2 or z.real < -0.2:
            pts.append(z)
    h = 1e-5
    for f in funcs:
        for z in pts:
            fd = (evaluate(f, z + h) - evaluate(f, z - h)) / (2 * h)
            d = derivative(f, z)
            assert abs(fd - d) <= 1e-6 * max(1.0, abs(d))


def test_derivative_at_zero_minus():
    assert derivative_at_zero_minus(ATOM) == pytest.approx(1.0)
    assert derivative_at_zero_minus(PSI2) == pytest.approx(0.5)


def test_derivative_at_zero_divergent_density():
    # tabulated stand-in for density t**(alpha-1) near 0 with alpha in (0,1)
    alpha = 0.5
    nodes = tuple(np.linspace(0.01, 0.99, 25))
    weights = tuple(t ** (alpha - 1.0) * (0.98 / 25) for t in nodes)
    piece = TabulatedDensity(nodes=nodes, weights=weights, support=(0.0, 1.0), zero_exponent=alpha)
    f = CbfSpec(name="alpha_density", mu=MeasureSpec(densities=(piece,)))
    assert derivative_at_zero_minus(f) is INFINITE


def test_condition_star():
    assert condition_star(ATOM) is True
    assert condition_star(PSI2) is True
    assert condition_star(R43) is False


def test_condition_star_unknown_tail():
    piece = TabulatedDensity(nodes=(1.0, 2.0), weights=(0.1, 0.1), support=(0.5, math.inf))
    f = CbfSpec(name="mystery", mu=MeasureSpec(densities=(piece,)))
    with pytest.raises(UnknownTail):
        condition_star(f)


def test_star_failure_is_observable_for_remark43():
    # partial integrals of |f(-x)|/(1+x^2) keep growing: increments do not decay
    def block(lo, hi):
        return quad(
            lambda x: abs(cbf._remark43_value(-x)) / (1 + x * x), lo, hi, limit=800
        )[0]

    increments = [block(10.0**k, 10.0 ** (k + 1)) for k in range(1, 6)]
    ratios = [b / a for a, b in zip(increments, increments[1:])]
    assert all(r > 0.5 for r in ratios)  # genuinely non-integrable trend

    # contrast: an admissible function has rapidly shrinking increments
    def block_atom(lo, hi):
        return quad(lambda x: abs(evaluate(ATOM, -x)) / (1 + x * x), lo, hi)[0]

    inc_atom = [block_atom(10.0**k, 10.0 ** (k + 1)) for k in range(1, 6)]
    ratios_atom = [b / a for a, b in zip(inc_atom, inc_atom[1:])]
    assert all(r < 0.2 for r in ratios_atom)


def test_remark43_values():
    assert evaluate(R43, -math.e) == pytest.approx(-1.0, abs=1e-14)
    # removable singularity at z = -1
    assert evaluate(R43, -1.0 + 1e-5) == pytest.approx(-0.5 + 1e-5 / 3, abs=1e-9)
    for eps in (1e-3, 1e-6):
        direct = evaluate(R43, -1.0 + 2e-3)  # just outside the series window
        series = -0.5 + 2e-3 / 3 + (2e-3) ** 2 / 24
        assert direct == pytest.approx(series, abs=1e-8)
    assert evaluate(R43, 0.0) == 0.0


def test_remark43_derivative_consistent():
    for z in (-0.5, -5.0, 2.0j, -1.0 + 0.3j):
        h = 1e-6
        fd = (evaluate(R43, z + h) - evaluate(R43, z - h)) / (2 * h)
        assert derivative(R43, z) == pytest.approx(fd, rel=1e-6)


def test_remark43_slope_at_zero_is_infinite():
    assert derivative_at_zero_minus(R43) is INFINITE


def test_remark43_has_no_measure():
    with pytest.raises(MeasureUnavailable):
        R43.require_measure()


def test_catalog_monotone_and_nonpositive_on_negative_axis():
    xs = -np.logspace(-2, 2, 120)[::-1]  # increasing grid in (-inf, 0)
    for f in catalog():
        vals = [evaluate(f, complex(x)).real for x in xs]
        assert all(v <= 1e-12 for v in vals)
        diffs = np.diff(vals)
        assert np.all(diffs >= -1e-10)


def test_catalog_herglotz_upper_half_plane():
    rng = np.random.default_rng(17)
    pts = [complex(rng.uniform(-10, 10), rng.uniform(1e-3, 10)) for _ in range(100)]
    for f in catalog():
        for z in pts:
            assert evaluate(f, z).imag >= -1e-12


def test_linear_bound_from_slope_at_zero():
    for f in (ATOM, PSI2, make_rational([(0.5, 1.0), (4.0, 2.0)])):
        slope = derivative_at_zero_minus(f)
        assert slope is not INFINITE
        for x in -np.logspace(-3, 3, 50):
            assert abs(evaluate(f, complex(x))) <= slope * abs(x) * (1 + 1e-12)


def test_scaled_value_monotone_in_s():
    # f(-s)/(-s) is nonincreasing in s > 0
    ss = np.logspace(-3, 3, 80)
    for f in (ATOM, PSI2):
        q = [evaluate(f, complex(-s)).real / (-s) for s in ss]
        assert np.all(np.diff(q) <= 1e-12)


def test_measure_integrate_psi_matches_eval():
    # evaluating through the generic measure-integration path
    z = -1.7 + 0.4j
    val, err, _ = PSI2.mu.integrate(lambda t: z / (t - z), 1e-12)
    assert val == pytest.approx(evaluate(PSI2, z), abs=1e-10)
    assert err <= 1e-10


def test_parse_function_spec_grammar():
    f = parse_function_spec("rational:1,1")
    assert evaluate(f, -1.0) == pytest.approx(-0.5)
    f2 = parse_function_spec("rational:1,1;2,0.5")
    assert evaluate(f2, -2.0) == pytest.approx(-2.0 / 3.0 - 0.25)
    f3 = parse_function_spec("psi:2")
    assert evaluate(f3, -2.0) == pytest.approx(evaluate(PSI2, -2.0))
    f4 = parse_function_spec("remark43")
    assert f4.star_known is False
    with pytest.raises(ValueError):
        parse_function_spec("nope:1")


def test_parse_function_spec_json_roundtrip():
    d = {
        "c": 0,
        "b": 0,
        "atoms": [{"t": 1.0, "w": 1.0}],
        "densities": [{"kind": "reciprocal_t_on_tail", "lambda": 2.0}],
    }
    f = parse_function_spec(d)
    assert evaluate(f, -1.0) == pytest.approx(-0.5 + evaluate(PSI2, -1.0))
    d2 = function_spec_to_dict(f)
    f2 = parse_function_spec(d2)
    assert evaluate(f2, -3.3) == pytest.approx(evaluate(f, -3.3))


def test_cbfspec_sign_constraints():
    with pytest.raises(ValueError):
        CbfSpec(name="bad", c=0.1, mu=ATOM.mu)
    with pytest.raises(ValueError):
        CbfSpec(name="bad", b=-0.1, mu=ATOM.mu)
