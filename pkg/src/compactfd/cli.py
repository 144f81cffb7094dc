"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 numerical or validation failure.
Output files are written atomically and only after the run succeeded.
"""

import argparse
import math
import os
import sys
import tempfile

from . import __version__
from .assembly import Grid, assemble, resolve_scheme
from .errors import CompactFDError, NumericalError, UsageError
from .fields import BUILTIN_PROBLEMS, builtin_problem, load_problem_file
from .harness import ConvergenceReport, ConvergenceRow, consistency_probe, convergence_study, linf_error
from .kdim import nullity_table
from .solver import solve, tolerance_schedule

__all__ = ["main", "build_parser"]

SCHEME_HELP = "1d-oM (M even, 2..12) | 2d-o4 | 2d-o6 | 3d-o4 | dd-o4"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="compactfd", description="Compact symmetric high-order FD solver for -div(a grad u) = f.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--problem", required=True, help="builtin name (see list-problems) or problem file")
        p.add_argument("--scheme", required=True, help=SCHEME_HELP)
        p.add_argument("--threads", type=int, default=1, help="worker threads for assembly (default 1)")

    def solver_opts(p):
        p.add_argument("--solver", choices=("cg", "direct", "cholesky"), default="cg")
        p.add_argument("--tol", type=float, default=None, help="CG tolerance on R (default: min(1e-2, 0.1 h^4))")
        p.add_argument("--max-iter", type=int, default=None)

    s = sub.add_parser("solve", help="assemble and solve on one grid")
    common(s)
    solver_opts(s)
    s.add_argument("--n", type=int, required=True, help="subdivisions per axis")
    s.add_argument("--dump-matrix", metavar="PATH", help="write the matrix in Matrix Market format")
    s.add_argument("--out", metavar="CSV", help="write the result row as CSV")

    c = sub.add_parser("convergence", help="grid-refinement study with N doubling")
    common(c)
    solver_opts(c)
    c.add_argument("--n-start", type=int, required=True)
    c.add_argument("--n-end", type=int, required=True)
    c.add_argument("--out", metavar="CSV")

    k = sub.add_parser("consistency", help="truncation residual of the exact solution and its slope")
    common(k)
    k.add_argument("--n-list", required=True, help="comma-separated N values, e.g. 8,16,32,64")
    k.add_argument("--out", metavar="CSV")

    d = sub.add_parser("kdim", help="exact K_M table for the compact stencil")
    d.add_argument("--dim", type=int, required=True)
    d.add_argument("--max-m", type=int, default=8)
    d.add_argument("--exclude-corners", action="store_true")
    d.add_argument("--out", metavar="CSV")

    sub.add_parser("list-problems", help="show the builtin problems")
    return parser


def _load_problem(spec):
    if spec in BUILTIN_PROBLEMS:
        return builtin_problem(spec)
    if os.path.isfile(spec):
        return load_problem_file(spec)
    known = ", ".join(sorted(BUILTIN_PROBLEMS))
    raise UsageError(f"--problem {spec!r} is neither a builtin ({known}) nor a readable file")


def _check_scheme(name, problem):
    scheme = resolve_scheme(name, problem.dim)
    if scheme.dim == 1 and not 2 <= scheme.order <= 12:
        raise UsageError("1D schemes are available for M = 2, 4, ..., 12")
    return scheme


def _check_output(path):
    if path is None:
        return
    directory = os.path.dirname(os.path.abspath(path)) or "."
    if not os.path.isdir(directory):
        raise UsageError(f"output directory {directory!r} does not exist")


def _atomic_write(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".out-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _solver_name(arg):
    return {"cg": "cg", "direct": "auto", "cholesky": "cholesky"}[arg]


def _cmd_solve(args, out):
    problem = _load_problem(args.problem)
    scheme = _check_scheme(args.scheme, problem)
    _check_output(args.out)
    _check_output(args.dump_matrix)
    grid = Grid.for_problem(problem, args.n)
    system = assemble(problem, scheme, grid, threads=args.threads)
    tol = args.tol if args.tol is not None else tolerance_schedule(grid.h)
    report = solve(system, method=_solver_name(args.solver), tol=tol, max_iter=args.max_iter)
    err = linf_error(report.solution, problem, grid) if problem.u_exact is not None else math.nan
    row = ConvergenceRow(args.n, grid.h, err, None, report.iterations, report.relres, report.seconds)
    text = ConvergenceReport([row]).to_csv()
    if args.dump_matrix:
        system.write_matrix_market(args.dump_matrix)
    if args.out:
        _atomic_write(args.out, text)
    out.write(text)
    return 0


def _cmd_convergence(args, out):
    problem = _load_problem(args.problem)
    scheme = _check_scheme(args.scheme, problem)
    _check_output(args.out)
    tol = args.tol
    report = convergence_study(
        problem, scheme, args.n_start, args.n_end, solver=_solver_name(args.solver), tol=tol,
        threads=args.threads, max_iter=args.max_iter,
    )  # fmt: skip
    text = report.to_csv()
    if args.out:
        _atomic_write(args.out, text)
    out.write(text)
    return 0


def _cmd_consistency(args, out):
    problem = _load_problem(args.problem)
    scheme = _check_scheme(args.scheme, problem)
    _check_output(args.out)
    try:
        Ns = [int(x) for x in args.n_list.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"--n-list must be comma-separated integers, got {args.n_list!r}") from None
    if len(Ns) < 2 or min(Ns) < 2:
        raise UsageError("--n-list needs at least two values >= 2")
    result = consistency_probe(problem, scheme, Ns)
    lines = ["N,h,residual"]
    lines += [f"{N},{h:.10g},{r:.6e}" for N, h, r in zip(result.Ns, result.hs, result.residuals)]
    text = "\n".join(lines) + "\n"
    if args.out:
        _atomic_write(args.out, text)
    out.write(text)
    out.write(f"# slope {result.slope:.3f} (expected {scheme.order + 2})\n")
    return 0


def _cmd_kdim(args, out):
    if args.dim < 1:
        raise UsageError("--dim must be positive")
    if args.max_m < -1:
        raise UsageError("--max-m must be >= -1")
    _check_output(args.out)
    rows = nullity_table(args.dim, args.max_m, args.exclude_corners)
    text = "M,K\n" + "".join(f"{M},{K}\n" for M, K in rows)
    if args.out:
        _atomic_write(args.out, text)
    out.write(text)
    return 0


def _cmd_list(args, out):
    for name in sorted(BUILTIN_PROBLEMS):
        spec = BUILTIN_PROBLEMS[name]
        l1, l2 = spec["domain"]
        out.write(f"{name}: d={spec['dim']}, domain=({l1:g},{l2:g})^{spec['dim']}, a={spec['a']}, u={spec['u']}\n")
    return 0


COMMANDS = {
    "solve": _cmd_solve,
    "convergence": _cmd_convergence,
    "consistency": _cmd_consistency,
    "kdim": _cmd_kdim,
    "list-problems": _cmd_list,
}


def main(argv=None, out=None):
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args, out)
    except UsageError as exc:
        print(f"compactfd: usage error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"compactfd: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except CompactFDError as exc:
        print(f"compactfd: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
