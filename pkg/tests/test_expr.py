import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from compactfd.errors import ParseError, UsageError
from compactfd.expr import evaluate, evaluate_jet, parse


def test_precedence_and_associativity():
    assert evaluate(parse("2+3*4^2", 1), [0.0]) == 50.0
    assert evaluate(parse("2^3^2", 1), [0.0]) == pytest.approx(512.0)
    assert evaluate(parse("-2^2", 1), [0.0]) == -4.0
    assert evaluate(parse("8/4/2", 1), [0.0]) == 1.0
    assert evaluate(parse("x - y - z", 3), [1.0, 2.0, 3.0]) == -4.0


def test_constants_functions_and_aliases():
    e = parse("sin(pi*x1) + ln(e) + sqrt(x2)", 2)
    assert evaluate(e, [0.5, 4.0]) == pytest.approx(4.0)


def test_example1_coefficient_and_solution():
    a = parse("ln(3*x^3+5*x^2+4)", 1)
    assert evaluate(a, [0.0]) == pytest.approx(math.log(4.0))
    u = parse("4^(x^2+2*x+3)", 1)
    assert evaluate(u, [0.0]) == pytest.approx(64.0)
    J = evaluate_jet(u, [0.0], 2)
    # d/dx 4^(x^2+2x+3) = 4^(...) ln 4 (2x + 2), which is 128 ln 4 = 256 ln 2 at x = 0
    assert J.coeffs[1] == pytest.approx(256 * math.log(2.0))


def test_parse_error_offset():
    with pytest.raises(ParseError, match=r"unexpected '\*' at offset 2"):
        parse("2+*x", 1)
    with pytest.raises(ParseError) as info:
        parse("sin(x", 1)
    assert info.value.position == 5
    with pytest.raises(ParseError):
        parse("foo(x)", 1)
    with pytest.raises(ParseError):
        parse("x + y", 1)


def test_vectorized_evaluation():
    e = parse("x*y + 1", 2)
    pts = np.array([[0.0, 1.0, 2.0], [3.0, 4.0, 5.0]])
    np.testing.assert_allclose(evaluate(e, pts), [1.0, 5.0, 11.0])
    with pytest.raises(UsageError):
        evaluate(parse("x*y", 2), [1.0])


# random expression text over x, y with a guaranteed-positive argument for ln and sqrt
LEAVES = st.sampled_from(["x", "y", "1", "2.5", "0.5", "pi"])


def _combine(children):
    binary = st.tuples(children, st.sampled_from(["+", "-", "*"]), children).map(lambda t: f"({t[0]} {t[1]} {t[2]})")
    unary = st.tuples(st.sampled_from(["sin", "cos", "exp", "tanh"]), children).map(lambda t: f"{t[0]}({t[1]})")
    pos = children.map(lambda s: f"ln(2 + sin({s}))")
    power = st.tuples(children, st.integers(0, 3)).map(lambda t: f"({t[0]})^{t[1]}")
    quotient = st.tuples(children, children).map(lambda t: f"{t[0]} / (1.5 + cos({t[1]}))")
    return binary | unary | pos | power | quotient


EXPRS = st.recursive(LEAVES, _combine, max_leaves=6)
POINT = st.tuples(st.floats(-0.9, 0.9), st.floats(-0.9, 0.9))


@settings(max_examples=80, deadline=None)
@given(EXPRS, POINT)
def test_pretty_roundtrip(text, pt):
    e = parse(text, 2)
    again = parse(e.pretty(), 2)
    v1, v2 = evaluate(e, list(pt)), evaluate(again, list(pt))
    assume(math.isfinite(v1) and abs(v1) < 1e100)
    assert v2 == pytest.approx(v1, rel=1e-12, abs=1e-12)


@settings(max_examples=80, deadline=None)
@given(EXPRS, POINT, st.integers(0, 4))
def test_order_zero_jet_equals_evaluate(text, pt, order):
    e = parse(text, 2)
    v = evaluate(e, list(pt))
    assume(math.isfinite(v) and abs(v) < 1e100)
    assert evaluate_jet(e, np.array(pt), order).value == pytest.approx(v, rel=1e-12, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(EXPRS, POINT)
def test_jet_partials_match_sympy(text, pt):
    e = parse(text, 2)
    x, y = sp.symbols("x y")
    ref = sp.sympify(text.replace("^", "**").replace("ln(", "log("), locals={"x": x, "y": y, "pi": sp.pi})
    J = evaluate_jet(e, np.array(pt), 3)
    subs = {x: pt[0], y: pt[1]}
    for k in J.monomials(2, 3):
        want = float(sp.diff(ref, x, k[0], y, k[1]).evalf(subs=subs))
        assume(math.isfinite(want) and abs(want) < 1e8)
        assert J.partial(k) == pytest.approx(want, rel=1e-8, abs=1e-8)


@settings(max_examples=40, deadline=None)
@given(st.floats(-1.0, 1.0), st.floats(0.2, 3.0))
def test_real_power_matches_exp_ln(x0, base):
    e = parse(f"{base!r}^(x^2 + 1)", 1)
    J = evaluate_jet(e, [x0], 3)
    s = sp.Symbol("s")
    ref = sp.Float(base) ** (s**2 + 1)
    for k in range(4):
        want = float(sp.diff(ref, s, k).subs(s, x0))
        assert J.partial(k) == pytest.approx(want, rel=1e-10, abs=1e-12)
