"""High-order compact finite difference schemes for -div(a grad u) = f."""

__version__ = "0.1.0"

from .assembly import Grid, SymmetricSparseSystem, assemble, dirichlet_values
from .errors import (
    CompactFDError,
    ConstancyGateError,
    ConvergenceError,
    DefinitenessError,
    DomainError,
    NumericalError,
    ParseError,
    SingularityError,
    UsageError,
    ValidationError,
)
from .expr import evaluate, evaluate_jet, parse
from .fields import Problem, builtin_problem, derived_fields, direct_problem, manufactured_problem
from .harness import consistency_probe, convergence_study, linf_error
from .jets import Jet1, JetN
from .solver import conjugate_gradient, dense_cholesky, sparse_direct, tolerance_schedule

__all__ = [
    "CompactFDError",
    "ConstancyGateError",
    "ConvergenceError",
    "DefinitenessError",
    "DomainError",
    "NumericalError",
    "ParseError",
    "SingularityError",
    "UsageError",
    "ValidationError",
    "evaluate",
    "evaluate_jet",
    "parse",
    "Problem",
    "builtin_problem",
    "derived_fields",
    "direct_problem",
    "manufactured_problem",
    "Jet1",
    "JetN",
    "Grid",
    "SymmetricSparseSystem",
    "assemble",
    "dirichlet_values",
    "consistency_probe",
    "convergence_study",
    "linf_error",
    "conjugate_gradient",
    "dense_cholesky",
    "sparse_direct",
    "tolerance_schedule",
]
