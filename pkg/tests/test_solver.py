import numpy as np
import pytest
import scipy.sparse as sp

from compactfd.assembly import Grid, assemble
from compactfd.errors import ConvergenceError, DefinitenessError
from compactfd.fields import builtin_problem, manufactured_problem
from compactfd.solver import (
    conjugate_gradient,
    dense_cholesky,
    relative_residual,
    solve,
    sparse_direct,
    tolerance_schedule,
)


def test_identity_converges_in_one_step():
    b = np.array([1.0, -2.0, 3.0])
    rep = conjugate_gradient((sp.identity(3, format="csr"), b), tol=1e-12)
    assert rep.iterations == 1
    np.testing.assert_allclose(rep.solution, b)


def test_diagonal_two_by_two():
    rep = conjugate_gradient((sp.diags([1.0, 2.0]).tocsr(), np.array([1.0, 2.0])), tol=1e-12)
    assert rep.iterations <= 2
    np.testing.assert_allclose(rep.solution, [1.0, 1.0])


def test_one_by_one_cholesky():
    assert dense_cholesky((np.array([[2.0]]), np.array([1.0]))).solution[0] == pytest.approx(0.5)


def test_cholesky_rejects_zero_diagonal():
    A = np.array([[1.0, 0.0], [0.0, 0.0]])
    with pytest.raises(DefinitenessError):
        dense_cholesky((A, np.ones(2)))


def test_cg_reports_breakdown_and_iteration_cap():
    A = sp.diags([1.0, -1.0]).tocsr()
    with pytest.raises(DefinitenessError):
        conjugate_gradient((A, np.array([1.0, 1.0])))
    rng = np.random.default_rng(0)
    Q = rng.standard_normal((30, 30))
    A = sp.csr_matrix(Q @ Q.T + 1e-3 * np.eye(30))
    with pytest.raises(ConvergenceError) as info:
        conjugate_gradient((A, rng.standard_normal(30)), tol=1e-14, max_iter=3)
    assert info.value.report.iterations == 3
    assert not info.value.report.converged


def test_unit_coefficient_2d_pivots_positive():
    p = manufactured_problem("1", "sin(x)*sin(y)", dim=2)
    rep = dense_cholesky(assemble(p, "2d-o4", Grid.for_problem(p, 4)))
    assert rep.relres < 1e-14


def test_example3_cg_iterations():
    p = builtin_problem("example3")
    system = assemble(p, "3d-o4", Grid.for_problem(p, 16))
    rep = conjugate_gradient(system, tol=1e-4)
    assert rep.relres <= 1e-4
    assert 14 <= rep.iterations <= 54
    again = conjugate_gradient(system, tol=1e-4)
    assert again.iterations == rep.iterations
    assert np.array_equal(again.solution, rep.solution)


def test_direct_solvers_and_dispatch_agree():
    p = manufactured_problem("2+sin(x+2*y)", "exp(x)*sin(2*y)", dim=2)
    system = assemble(p, "2d-o4", Grid.for_problem(p, 16))
    ref = sparse_direct(system).solution
    for method in ("cg", "cholesky", "direct", "auto"):
        sol = solve(system, method=method, tol=1e-12).solution
        assert np.max(np.abs(sol - ref)) <= 1e-9 * np.max(np.abs(ref))
    assert relative_residual(system.matrix, ref, system.rhs) < 1e-13


def test_jacobi_preconditioning_reaches_tolerance():
    p = builtin_problem("example3")
    system = assemble(p, "3d-o4", Grid.for_problem(p, 8))
    rep = conjugate_gradient(system, tol=1e-10, precondition="diagonal")
    assert rep.relres <= 1e-10


def test_tolerance_schedule():
    assert tolerance_schedule(1.0) == 1e-2
    assert tolerance_schedule(0.5) == 0.1 * 0.5**4
    assert tolerance_schedule(2.0**-4) == pytest.approx(0.1 * 2.0**-16)
    assert tolerance_schedule(1e-6) == 1e-12
