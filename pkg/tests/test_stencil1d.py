import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial import Polynomial

from compactfd.errors import SingularityError
from compactfd.expr import parse
from compactfd.fields import builtin_problem, manufactured_problem
from compactfd.harness import consistency_probe
from compactfd.stencil1d import (
    Q_TABLE,
    W_TERMS,
    closed_form_E12,
    closed_form_w,
    edge_coefficient,
    recursion_tables,
    stencil_1d,
)


def test_constant_coefficient_tables_collapse():
    T = recursion_tables(parse("1", 1), 0.3, 6)
    for j in range(2, 8):
        assert T.E_value(j) == 0.0
    # with a = 1, u^(j) = f^(j-2): only the top entry of each F row survives
    for j in range(2, 8):
        for k in range(j - 1):
            assert T.F_value(j, k) == (1.0 if k == j - 2 else 0.0)


def test_exponential_coefficient_tables():
    b = 0.4
    T = recursion_tables(parse("exp(x)", 1), b, 4)
    assert T.E_value(2) == pytest.approx(-1.0)
    assert T.E_value(3) == pytest.approx(1.0)
    assert T.F_value(2, 0) == pytest.approx(math.exp(-b))


def test_nonpositive_coefficient_raises():
    with pytest.raises(SingularityError):
        recursion_tables(parse("x - 1", 1), 0.5, 4)


def test_unit_coefficient_stencil():
    p = manufactured_problem("1", "x*(1-x)/2", dim=1)
    s = stencil_1d(p, 0.5, 0.25, 4)
    assert (s.C_minus, s.C_zero, s.C_plus) == pytest.approx((1.0, -2.0, 1.0))
    assert s.rhs_weights == pytest.approx((-1.0, 0.0, -1.0 / 12.0, 0.0))
    assert s.rhs == pytest.approx(-0.0625)
    assert abs(s.apply(lambda t: t * (1 - t) / 2)) < 1e-15


@pytest.mark.parametrize("M", [2, 4, 6, 8])
def test_exact_on_polynomials_for_unit_coefficient(M):
    rng = np.random.default_rng(M)
    coeffs = rng.uniform(-1, 1, M + 2)
    u = " + ".join(f"({float(c)!r})*x^{k}" for k, c in enumerate(coeffs))
    p = manufactured_problem("1", u, dim=1)
    poly = Polynomial(coeffs)
    for c in (0.3, 0.55):
        s = stencil_1d(p, c, 0.1, M)
        assert abs(s.apply(poly)) <= 1e-12 * max(1.0, abs(s.rhs))


@settings(max_examples=30, deadline=None)
@given(st.integers(4, 60), st.integers(3, 5), st.sampled_from([2, 4, 6, 8, 10]))
def test_link_symmetry(i, k, M):
    p = builtin_problem("example1")
    h = 2.0**-k
    c = i / 64.0
    if c - h <= 0 or c + 2 * h >= 1:
        return
    left = stencil_1d(p, c, h, M)
    right = stencil_1d(p, c + h, h, M)
    assert left.C_plus == right.C_minus


def test_stencil_row_sum_is_zero():
    s = stencil_1d(builtin_problem("example1"), 0.4, 0.05, 8)
    assert s.C_minus + s.C_zero + s.C_plus == pytest.approx(0.0, abs=1e-14)


def test_q_table_has_all_entries():
    assert sorted(Q_TABLE) == list(range(1, 83))
    used = sorted(qi for terms in W_TERMS.values() for qi, _ in terms)
    assert used == list(range(1, 83))
    assert float(Q_TABLE[1][0]) / Q_TABLE[1][1] == pytest.approx(-1 / 12)


def test_closed_form_simple_cases():
    assert closed_form_E12(parse("1", 1), 0.3, 0.2) == pytest.approx(1.0)
    x = 0.3
    w1 = closed_form_w(1, [math.exp(x)] * 11)
    assert w1 == pytest.approx(-math.exp(x) / 24)


@pytest.mark.parametrize("center", [0.1, 0.45, 0.9])
def test_closed_form_coefficients_match_recursion(center):
    """The tabulated w_k equal the h^(2k) coefficients of the recursion series, k = 1..5."""
    a = parse("ln(3*x^3+5*x^2+4)", 1)
    T = recursion_tables(a, center, 12)
    series = edge_coefficient(T, Polynomial([0.0, 1.0]), 12)
    derivs = [T.a.partial(r) for r in range(11)]
    coef = series.coef
    assert coef[0] == pytest.approx(derivs[0], rel=1e-14)
    for k in range(1, 6):
        assert coef[2 * k] == pytest.approx(closed_form_w(k, derivs), rel=1e-10)
        assert abs(coef[2 * k - 1]) < 1e-14


def test_twelfth_order_consistency_on_smooth_problem():
    # a short-wavelength u keeps the residual above roundoff at these grid sizes
    p = manufactured_problem("2+sin(4*x)", "sin(16*x)", dim=1)
    r = consistency_probe(p, "1d-o12", [8, 16, 32])
    assert r.slope >= 13.7
