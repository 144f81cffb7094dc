"""Linear solvers for the assembled SPD systems.

``conjugate_gradient`` stops on the relative residual ``R = ||A u - b|| / ||b||``
starting from a zero guess.  ``dense_cholesky`` is the small-system reference
and ``sparse_direct`` (sparse LU) handles large 2D grids where CG would need
many thousands of iterations.
"""

import time
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConvergenceError, DefinitenessError, UsageError

__all__ = [
    "SolveReport",
    "conjugate_gradient",
    "dense_cholesky",
    "sparse_direct",
    "solve",
    "tolerance_schedule",
    "relative_residual",
    "DENSE_LIMIT",
]

DENSE_LIMIT = 20000


@dataclass
class SolveReport:
    solution: np.ndarray
    iterations: int
    relres: float
    seconds: float
    method: str = ""
    converged: bool = True


def _unpack(system):
    if hasattr(system, "matrix"):
        return system.matrix, np.asarray(system.rhs, dtype=float)
    A, b = system
    return A, np.asarray(b, dtype=float)


def relative_residual(A, u, b):
    nb = np.linalg.norm(b)
    r = np.linalg.norm(A @ u - b)
    return float(r / nb) if nb > 0 else float(r)


def tolerance_schedule(h):
    """``min(1e-2, 0.1 h^4)`` clipped below at ``1e-12``."""
    return float(max(min(1e-2, 0.1 * h**4), 1e-12))


def conjugate_gradient(system, tol=1e-10, max_iter=None, precondition="none"):
    """Conjugate gradient from ``u = 0``; stops when ``R <= tol``.

    ``precondition`` is ``"none"`` or ``"diagonal"`` (Jacobi).  Raises
    :class:`DefinitenessError` if a search direction has ``p.Ap <= 0`` and
    :class:`ConvergenceError` (carrying the report) after ``max_iter`` steps.
    """
    if tol <= 0:
        raise UsageError("tol must be positive")
    A, b = _unpack(system)
    n = b.shape[0]
    if max_iter is None:
        max_iter = max(10 * n, 100)
    if precondition not in ("none", "diagonal"):
        raise UsageError(f"unknown preconditioner {precondition!r}")
    t0 = time.perf_counter()
    x = np.zeros(n)
    nb = float(np.linalg.norm(b))
    if nb == 0.0:
        return SolveReport(x, 0, 0.0, time.perf_counter() - t0, "cg")
    inv_d = None
    if precondition == "diagonal":
        dg = A.diagonal() if sp.issparse(A) else np.diag(A)
        if np.any(dg <= 0):
            raise DefinitenessError("nonpositive diagonal entry; Jacobi preconditioning impossible")
        inv_d = 1.0 / dg
    r = b.copy()
    z = r * inv_d if inv_d is not None else r
    p = z.copy()
    rz = float(r @ z)
    it = 0
    relres = 1.0
    while it < max_iter:
        Ap = A @ p
        pAp = float(p @ Ap)
        if not pAp > 0:
            raise DefinitenessError(f"nonpositive curvature p.Ap = {pAp:.3e} at iteration {it}")
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        it += 1
        relres = float(np.linalg.norm(r)) / nb
        if relres <= tol:
            # confirm with the true residual; recursive residuals drift slightly
            relres = relative_residual(A, x, b)
            if relres <= tol:
                break
            r = b - A @ x
        z = r * inv_d if inv_d is not None else r
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    seconds = time.perf_counter() - t0
    report = SolveReport(x, it, relative_residual(A, x, b), seconds, "cg", True)
    if report.relres > tol:
        report.converged = False
        raise ConvergenceError(
            f"CG stopped after {it} iterations with R = {report.relres:.3e} > tol = {tol:.1e}", report
        )
    return report


def dense_cholesky(system):
    """Dense Cholesky factorization and triangular solves (``n <= DENSE_LIMIT``)."""
    A, b = _unpack(system)
    n = b.shape[0]
    if n > DENSE_LIMIT:
        raise UsageError(f"dense_cholesky is limited to n <= {DENSE_LIMIT}, got {n}")
    t0 = time.perf_counter()
    M = A.toarray() if sp.issparse(A) else np.asarray(A, dtype=float)
    try:
        c, low = scipy.linalg.cho_factor(M, lower=True, check_finite=True)
    except np.linalg.LinAlgError as exc:
        raise DefinitenessError(f"Cholesky factorization failed: {exc}") from None
    if np.any(np.diag(c) <= 0):
        raise DefinitenessError("Cholesky factor has a nonpositive pivot")
    x = scipy.linalg.cho_solve((c, low), b)
    return SolveReport(x, 0, relative_residual(A, x, b), time.perf_counter() - t0, "cholesky")


def sparse_direct(system):
    """Sparse LU solve (SuperLU); used for large grids."""
    A, b = _unpack(system)
    t0 = time.perf_counter()
    lu = spla.splu(sp.csc_matrix(A))
    x = lu.solve(b)
    return SolveReport(x, 0, relative_residual(A, x, b), time.perf_counter() - t0, "sparse-lu")


def solve(system, method="cg", tol=1e-10, max_iter=None, precondition="none"):
    """Dispatch on ``method``: ``cg``, ``cholesky``, ``direct`` (sparse LU) or ``auto``."""
    if method == "cg":
        return conjugate_gradient(system, tol, max_iter, precondition)
    if method == "cholesky":
        return dense_cholesky(system)
    if method == "direct":
        return sparse_direct(system)
    if method == "auto":
        n = _unpack(system)[1].shape[0]
        return dense_cholesky(system) if n <= 2000 else sparse_direct(system)
    raise UsageError(f"unknown solver {method!r}")
