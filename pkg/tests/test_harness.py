import math

import numpy as np
import pytest

from compactfd.assembly import Grid
from compactfd.errors import UsageError
from compactfd.fields import builtin_problem, manufactured_problem
from compactfd.harness import CSV_HEADER, consistency_probe, convergence_study, fit_slope, linf_error


def test_linf_error_basics():
    p = manufactured_problem("1", "x*y", dim=2)
    grid = Grid.for_problem(p, 4)
    exact = p.u_value(grid.interior_nodes())
    assert linf_error(exact, p, grid) == 0.0
    bumped = exact.copy()
    bumped[4] += 1e-3
    assert linf_error(bumped, p, grid) == pytest.approx(1e-3)


def test_example1_second_level_error():
    r = convergence_study(builtin_problem("example1"), "1d-o12", 2, 4, solver="cholesky")
    assert 9.8187e-05 / 2 <= r.errors[1] <= 9.8187e-05 * 2


def test_csv_format_and_order_column():
    r = convergence_study(builtin_problem("example1"), "1d-o4", 4, 16, solver="cholesky")
    lines = r.to_csv().splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == 4
    assert lines[1].split(",")[2] == "-"
    for row, line in zip(r.rows[1:], lines[2:]):
        prev = r.rows[r.rows.index(row) - 1]
        assert float(line.split(",")[2]) == pytest.approx(math.log2(prev.error / row.error), abs=1e-4)


def test_unit_coefficient_fourth_order_rates():
    p = manufactured_problem("1", "sin(pi*x)*sin(pi*y)", dim=2)
    r = convergence_study(p, "2d-o4", 8, 64, solver="direct")
    assert all(abs(o - 4.0) <= 0.2 for o in r.orders)


def test_sixth_order_rates_for_admissible_coefficient():
    p = manufactured_problem("exp(x+y)", "sin(pi*x)*sin(pi*y)", dim=2)
    r = convergence_study(p, "2d-o6", 8, 64, solver="direct")
    assert all(abs(o - 6.0) <= 0.3 for o in r.orders)


@pytest.mark.slow
def test_example3_orders():
    r = convergence_study(builtin_problem("example3"), "3d-o4", 4, 32, tol=lambda h: 1e-2 if h > 0.2 else 0.1 * h**4)
    for got, want in zip(r.orders, (3.9, 4.3, 4.1)):
        assert abs(got - want) <= 0.3


def test_probe_slopes():
    p = manufactured_problem("2+sin(x)", "exp(x)*cos(2*x)", dim=1)
    assert consistency_probe(p, "1d-o4", [8, 16, 32]).slope == pytest.approx(6.0, abs=0.3)
    q = manufactured_problem("2+x*y*z", "sin(x+2*y-z)", dim=3)
    assert consistency_probe(q, "dd-o4", [8, 16, 32]).slope >= 5.7


def test_fit_slope_and_levels():
    hs = [0.5, 0.25, 0.125, 0.0625]
    assert fit_slope(hs, [h**4 for h in hs]) == pytest.approx(4.0)
    assert math.isnan(fit_slope(hs, [1.0, 0.0, 1.0, 1.0]))
    with pytest.raises(UsageError):
        convergence_study(builtin_problem("example1"), "1d-o2", 4, 12)
    with pytest.raises(UsageError):
        consistency_probe(builtin_problem("example1"), "2d-o4", [4, 8])


def test_single_thread_runs_are_reproducible():
    p = builtin_problem("example3")
    a = convergence_study(p, "3d-o4", 4, 8)
    b = convergence_study(p, "3d-o4", 4, 8)
    assert a.errors == b.errors
    assert [r.iterations for r in a.rows] == [r.iterations for r in b.rows]
    assert np.isfinite(a.errors).all()
