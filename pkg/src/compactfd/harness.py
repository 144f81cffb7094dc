"""Error norms, grid-refinement studies and the consistency-order probe."""

import io
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .assembly import Grid, OneDScheme, assemble, resolve_scheme
from .errors import UsageError
from .solver import solve, tolerance_schedule
from .stencil1d import scheme_1d

__all__ = [
    "linf_error",
    "ConvergenceRow",
    "ConvergenceReport",
    "convergence_study",
    "ProbeResult",
    "consistency_probe",
    "fit_slope",
    "CSV_HEADER",
]

CSV_HEADER = "h,error_inf,order,iterations,relres,seconds"


def linf_error(u_h, p, grid):
    """``max |u_h - u_exact|`` over the interior nodes."""
    if p.u_exact is None:
        raise UsageError(f"problem {p.name!r} has no exact solution")
    exact = np.asarray(p.u_value(grid.interior_nodes()), dtype=float)
    return float(np.max(np.abs(np.asarray(u_h, dtype=float) - exact)))


@dataclass
class ConvergenceRow:
    N: int
    h: float
    error: float
    order: float | None
    iterations: int
    relres: float
    seconds: float


@dataclass
class ConvergenceReport:
    rows: list
    meta: dict = field(default_factory=dict)

    @property
    def errors(self):
        return [r.error for r in self.rows]

    @property
    def orders(self):
        return [r.order for r in self.rows[1:]]

    def to_csv(self):
        out = io.StringIO()
        out.write(CSV_HEADER + "\n")
        for r in self.rows:
            order = "-" if r.order is None else f"{r.order:.4f}"
            out.write(
                f"{r.h:.10g},{r.error:.6e},{order},{r.iterations},{r.relres:.3e},{r.seconds:.3f}\n"
            )
        return out.getvalue()


def _levels(N_start, N_end):
    if N_start < 2 or N_end < N_start:
        raise UsageError("need 2 <= N_start <= N_end")
    Ns = [N_start]
    while Ns[-1] * 2 <= N_end:
        Ns.append(Ns[-1] * 2)
    if Ns[-1] != N_end:
        raise UsageError("N_end must be N_start times a power of two")
    return Ns


def convergence_study(p, scheme, N_start, N_end, solver="cg", tol=None, threads=1, max_iter=None):
    """Assemble and solve at ``N = N_start, 2 N_start, ..., N_end``.

    ``tol`` is a number, a callable ``h -> tol`` or ``None`` for
    :func:`~compactfd.solver.tolerance_schedule`.
    """
    scheme = resolve_scheme(scheme, p.dim)
    rows = []
    for N in _levels(N_start, N_end):
        grid = Grid.for_problem(p, N)
        t0 = time.perf_counter()
        system = assemble(p, scheme, grid, threads=threads)
        level_tol = tolerance_schedule(grid.h) if tol is None else (tol(grid.h) if callable(tol) else tol)
        report = solve(system, method=solver, tol=level_tol, max_iter=max_iter)
        seconds = time.perf_counter() - t0
        err = linf_error(report.solution, p, grid)
        order = None
        if rows and err > 0 and rows[-1].error > 0:
            order = math.log2(rows[-1].error / err)
        rows.append(ConvergenceRow(N, grid.h, err, order, report.iterations, report.relres, seconds))
    return ConvergenceReport(rows, {"problem": p.name, "scheme": scheme.name, "solver": solver})


@dataclass
class ProbeResult:
    Ns: list
    hs: list
    residuals: list
    slope: float

    @property
    def local_slopes(self):
        r, h = self.residuals, self.hs
        return [math.log2(r[i] / r[i + 1]) / math.log2(h[i] / h[i + 1]) for i in range(len(r) - 1)]


def fit_slope(hs, values, last=3):
    """Least-squares slope of ``log2(values)`` against ``log2(h)`` over the last ``last`` levels."""
    hs = np.asarray(hs[-last:], dtype=float)
    v = np.asarray(values[-last:], dtype=float)
    if np.any(v <= 0):
        return float("nan")
    return float(np.polyfit(np.log2(hs), np.log2(v), 1)[0])


def _residual_1d(p, scheme, N):
    C, fh = scheme_1d(p, N, scheme.order, scheme.e_source)
    h = (p.l2 - p.l1) / N
    x = p.l1 + np.arange(N + 1) * h
    u = np.asarray(p.u_value(x[np.newaxis]), dtype=float)
    r = C[:-1] * (u[:-2] - u[1:-1]) + C[1:] * (u[2:] - u[1:-1]) - fh
    return float(np.max(np.abs(r)))


def _residual_nd(p, scheme, N):
    grid = Grid.for_problem(p, N)
    h = grid.h
    X = grid.interior_nodes()
    scheme.check_problem(p, grid.all_nodes())
    u0 = np.asarray(p.u_value(X), dtype=float)
    r = -scheme.rhs_values(p, X, h)
    for q in scheme.classes:
        qa = np.asarray(q, dtype=float)[:, np.newaxis]
        for s in (1.0, -1.0):
            C = scheme.link_values(p, q, X + s * qa * (h / 2.0), h)
            r += C * (np.asarray(p.u_value(X + s * qa * h), dtype=float) - u0)
    return float(np.max(np.abs(r)))


def consistency_probe(p, scheme, Ns, last=3):
    """Truncation residual ``max |sum_p C_p u(x + p h) - f_h(x)|`` per ``N`` and its log2 slope in ``h``.

    ``C_0`` is folded in as ``-sum_{p != 0} C_p``, so the residual is computed
    from the differences ``u(x + p h) - u(x)``.
    """
    scheme = resolve_scheme(scheme, p.dim)
    if p.u_exact is None:
        raise UsageError("consistency probe needs an exact solution")
    Ns = [int(N) for N in Ns]
    hs = [(p.l2 - p.l1) / N for N in Ns]
    if isinstance(scheme, OneDScheme):
        res = [_residual_1d(p, scheme, N) for N in Ns]
    else:
        res = [_residual_nd(p, scheme, N) for N in Ns]
    return ProbeResult(Ns, hs, res, fit_slope(hs, res, last))
