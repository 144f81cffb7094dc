from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from compactfd.errors import ConstancyGateError, UsageError
from compactfd.fields import builtin_problem, manufactured_problem
from compactfd.harness import consistency_probe
from compactfd.stencil_nd import (
    constancy_spread,
    get_scheme,
    stencil_2d_o4,
    stencil_2d_o6,
    stencil_3d_o4,
    stencil_dd_o4,
    stencil_instance,
)

SMOOTH_2D = manufactured_problem("2+sin(x+2*y)", "exp(x)*sin(2*y)", dim=2)
SMOOTH_3D = manufactured_problem("2+sin(x-y+z)", "sin(2*x)*cos(y)*exp(z)", dim=3)
EXP_2D = manufactured_problem("exp(x+y)", "sin(2*x)*cos(3*y)", dim=2)


def test_unit_coefficient_2d_o4_is_the_nine_point_stencil():
    p = manufactured_problem("1", "sin(x)*cos(y)", dim=2)
    s = stencil_2d_o4(p, (0.5, 0.5), 0.125)
    c = s.coefficients
    assert c[(1, 0)] == pytest.approx(2 / 3) and c[(0, -1)] == pytest.approx(2 / 3)
    assert c[(1, 1)] == pytest.approx(1 / 6) and c[(-1, 1)] == pytest.approx(1 / 6)
    assert c[(0, 0)] == pytest.approx(-10 / 3)
    t = stencil_dd_o4(p, (0.5, 0.5), 0.125)
    for q in c:
        assert t.coefficients[q] == pytest.approx(-c[q])
    assert t.rhs == pytest.approx(-s.rhs)


def test_unit_coefficient_2d_o6_weights():
    p = manufactured_problem("1", "sin(x)*cos(y)", dim=2)
    s = stencil_2d_o6(p, (0.5, 0.5), 0.125)
    c = s.coefficients
    assert c[(1, 0)] == pytest.approx(-4.0)
    assert c[(1, -1)] == pytest.approx(-1.0)
    assert c[(0, 0)] == pytest.approx(20.0)


@pytest.mark.parametrize(
    "make",
    [
        lambda: stencil_2d_o4(SMOOTH_2D, (0.4, 0.6), 0.1),
        lambda: stencil_2d_o6(EXP_2D, (0.4, 0.6), 0.1),
        lambda: stencil_3d_o4(SMOOTH_3D, (0.4, 0.6, 0.3), 0.1),
        lambda: stencil_dd_o4(SMOOTH_3D, (0.4, 0.6, 0.3), 0.1),
    ],
)
def test_zero_row_sum(make):
    s = make()
    assert sum(s.coefficients.values()) == pytest.approx(0.0, abs=1e-13)
    assert len(s.coefficients) == 3**s.dim


def test_dd_o4_has_no_corner_links():
    p = manufactured_problem("2+sin(x1-x2+x3-x4)", "cos(x1+x2+x3+x4)", dim=4, domain=(0, 1))
    s = stencil_dd_o4(p, (0.5,) * 4, 0.125)
    for q, v in s.coefficients.items():
        if sum(1 for c in q if c) >= 3:
            assert v == 0.0


@settings(max_examples=25, deadline=None)
@given(
    st.sampled_from(["2d-o4", "2d-o6", "3d-o4", "dd-o4"]),
    st.integers(3, 10),
    st.integers(3, 10),
    st.integers(3, 10),
    st.data(),
)
def test_symmetry_of_link_coefficients(name, i, j, k, data):
    scheme = get_scheme(name, 3 if name in ("3d-o4", "dd-o4") else 2)
    d = scheme.dim
    p = {"2d-o4": SMOOTH_2D, "2d-o6": EXP_2D}.get(name, SMOOTH_3D)
    h = 1.0 / 16.0
    c = np.array([i, j, k][:d], dtype=float) * h
    q = data.draw(st.sampled_from([q for q in product((-1, 0, 1), repeat=d) if any(q)]))
    here = stencil_instance(scheme, p, c, h, check=False)
    there = stencil_instance(scheme, p, c + h * np.asarray(q), h, check=False)
    # dyadic points make both midpoints bitwise identical
    assert here.coefficients[q] == there.coefficients[tuple(-x for x in q)]


def test_constancy_gate():
    pts = np.random.default_rng(0).uniform(0, 1, (2, 50))
    assert constancy_spread(EXP_2D, pts)[0] < 1e-12
    assert constancy_spread(builtin_problem("example2"), pts)[0] > 1.0
    with pytest.raises(ConstancyGateError, match="constant"):
        stencil_2d_o6(builtin_problem("example2"), (0.5, 0.5), 0.125)


def test_gate_accepts_other_admissible_coefficient():
    # a = (1 + x)^2 gives ta = -2 ln(1 + x), and 2 lap(ta) - |grad ta|^2 = 4/(1+x)^2 - 4/(1+x)^2 = 0
    p = manufactured_problem("(1+x)^2", "sin(x)*sin(y)", dim=2)
    assert constancy_spread(p, np.random.default_rng(1).uniform(0, 1, (2, 40)))[0] < 1e-12
    stencil_2d_o6(p, (0.5, 0.5), 0.1)


def test_scheme_dimension_checks():
    with pytest.raises(UsageError):
        get_scheme("2d-o4", 3)
    with pytest.raises(UsageError):
        get_scheme("5d-o9", 2)
    with pytest.raises(UsageError):
        stencil_2d_o4(SMOOTH_3D, (0.5, 0.5, 0.5), 0.1)


@pytest.mark.parametrize(
    "p, scheme, Ns, expected",
    [
        (SMOOTH_2D, "2d-o4", [8, 16, 32], 6),
        (EXP_2D, "2d-o6", [8, 16, 32], 8),
        (SMOOTH_3D, "3d-o4", [8, 16, 32], 6),
        (SMOOTH_3D, "dd-o4", [8, 16, 32], 6),
    ],
)
def test_consistency_order(p, scheme, Ns, expected):
    r = consistency_probe(p, scheme, Ns)
    assert r.slope >= expected - 0.3
