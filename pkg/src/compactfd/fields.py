"""Problem data for ``-div(a grad u) = f`` on ``(l1, l2)^d`` with ``u = g`` on the boundary.

Stencil formulas are written in terms of ``ta = -ln a`` and ``tf = -f / a``;
:func:`derived_fields` produces jets of both at arbitrary batches of points.
"""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import SingularityError, UsageError, ValidationError
from .expr import Expression, evaluate, evaluate_jet, parse

__all__ = [
    "Problem",
    "DerivedFields",
    "BUILTIN_PROBLEMS",
    "builtin_problem",
    "manufactured_problem",
    "direct_problem",
    "derived_fields",
    "load_problem_file",
]


@dataclass(frozen=True)
class Problem:
    """PDE data bundle.

    In manufactured mode ``f`` is ``None`` and the source is computed from
    jets of ``a`` and ``u_exact``; ``g`` then defaults to ``u_exact``.
    """

    dim: int
    l1: float
    l2: float
    a: Expression
    f: Expression | None = None
    g: Expression | None = None
    u_exact: Expression | None = None
    name: str = "custom"
    description: str = field(default="", compare=False)

    @property
    def manufactured(self):
        return self.f is None

    def a_value(self, points):
        return evaluate(self.a, points)

    def a_jet(self, points, order):
        return evaluate_jet(self.a, points, order)

    def u_value(self, points):
        if self.u_exact is None:
            raise UsageError(f"problem {self.name!r} has no exact solution")
        return evaluate(self.u_exact, points)

    def g_value(self, points):
        expr = self.g if self.g is not None else self.u_exact
        if expr is None:
            raise UsageError(f"problem {self.name!r} has no boundary data")
        return evaluate(expr, points)

    def f_jet(self, points, order):
        """Jet of the source term at ``points``, truncated at ``order``."""
        if not self.manufactured:
            return evaluate_jet(self.f, points, order)
        A = evaluate_jet(self.a, points, order + 1)
        U = evaluate_jet(self.u_exact, points, order + 2)
        flux_div = None
        for i in range(self.dim):
            dU = U.deriv(i)
            term = A.deriv(i) * dU.truncate(order) + A.truncate(order) * dU.deriv(i)
            flux_div = term if flux_div is None else flux_div + term
        return -flux_div

    def f_value(self, points):
        if not self.manufactured:
            return evaluate(self.f, points)
        return self.f_jet(points, 0).value


def _as_expr(e, dim):
    return e if isinstance(e, Expression) else parse(str(e), dim)


def _sample_points(dim, l1, l2, per_axis=9):
    ticks = np.linspace(l1, l2, per_axis)
    mesh = np.meshgrid(*([ticks] * dim), indexing="ij")
    return np.stack([m.ravel() for m in mesh])


def _check_positive(a, dim, l1, l2):
    per_axis = {1: 257, 2: 33, 3: 11}.get(dim, 5)
    pts = _sample_points(dim, l1, l2, per_axis)
    vals = np.atleast_1d(evaluate(a, pts))
    bad = np.flatnonzero(~(vals > 0))
    if bad.size:
        raise ValidationError(
            f"coefficient a = {a} is not positive at {pts[:, bad[0]].tolist()} (value {vals[bad[0]]})"
        )


def manufactured_problem(a, u, domain=(0.0, 1.0), dim=1, name="manufactured", validate=True):
    """Problem whose source and boundary data come from plugging ``(a, u)`` into the PDE."""
    a = _as_expr(a, dim)
    u = _as_expr(u, dim)
    l1, l2 = map(float, domain)
    if not l1 < l2:
        raise UsageError("domain needs l1 < l2")
    if validate:
        _check_positive(a, dim, l1, l2)
    return Problem(dim=dim, l1=l1, l2=l2, a=a, u_exact=u, name=name)


def direct_problem(a, f, g, domain=(0.0, 1.0), dim=1, u=None, name="direct", validate=True):
    """Problem with user-supplied source and boundary expressions."""
    a = _as_expr(a, dim)
    l1, l2 = map(float, domain)
    if not l1 < l2:
        raise UsageError("domain needs l1 < l2")
    if validate:
        _check_positive(a, dim, l1, l2)
    return Problem(
        dim=dim,
        l1=l1,
        l2=l2,
        a=a,
        f=_as_expr(f, dim),
        g=_as_expr(g, dim),
        u_exact=None if u is None else _as_expr(u, dim),
        name=name,
    )


BUILTIN_PROBLEMS = {
    "example1": dict(
        dim=1,
        domain=(0.0, 1.0),
        a="ln(3*x^3+5*x^2+4)",
        u="4^(x^2+2*x+3)",
        description="1D, a = ln(3x^3+5x^2+4), u = 4^(x^2+2x+3)",
    ),
    "example2": dict(
        dim=2,
        domain=(0.0, 1.0),
        a="4+cos(5*pi*tanh(5*x-3))+sin(17.5*tanh(4*y-2))",
        u="exp(sin(20*ln(3*x^2+2*y^2+1)))*cos(20*y)",
        description="2D oscillatory a and u on the unit square",
    ),
    "example3": dict(
        dim=3,
        domain=(-1.0, 1.0),
        a="2+sin(5*x-3*y-3*z)",
        u="cos(4*x)*sin(4*y)*cos(5*z)",
        description="3D, a = 2+sin(5x-3y-3z), u = cos(4x)sin(4y)cos(5z) on (-1,1)^3",
    ),
}


def builtin_problem(name):
    try:
        spec = BUILTIN_PROBLEMS[name]
    except KeyError:
        known = ", ".join(sorted(BUILTIN_PROBLEMS))
        raise UsageError(f"unknown problem {name!r} (known: {known})") from None
    p = manufactured_problem(spec["a"], spec["u"], spec["domain"], spec["dim"], name=name)
    return Problem(
        dim=p.dim, l1=p.l1, l2=p.l2, a=p.a, u_exact=p.u_exact, name=name, description=spec["description"]
    )


@dataclass(frozen=True)
class DerivedFields:
    """Jets of ``a``, ``ta = -ln a`` and (optionally) ``tf = -f/a`` at a batch of points."""

    a: object
    ta: object
    tf: object = None
    f: object = None

    def ta_partial(self, k):
        return self.ta.partial(k)

    def tf_partial(self, k):
        if self.tf is None:
            raise UsageError("source partials were not requested")
        return self.tf.partial(k)

    def a_partial(self, k):
        return self.a.partial(k)


def derived_fields(p, points, order, source=True):
    """Jets of ``a``, ``-ln a`` and ``-f/a`` of total order ``order`` at ``points``.

    ``points`` is a scalar or 1D array for ``dim == 1`` and has shape
    ``(dim, *batch)`` otherwise.
    """
    pts = np.asarray(points, dtype=float)
    if p.dim == 1 and (pts.ndim == 0 or pts.shape[0] != 1):
        pts = pts[np.newaxis]
    A = p.a_jet(pts, order)
    a0 = np.asarray(A.value)
    if np.any(~(a0 > 0)):
        where = _bad_location(pts, a0)
        raise SingularityError(f"coefficient a = {p.a} is not positive", point=where)
    ta = -A.ln()
    if not source:
        return DerivedFields(a=A, ta=ta)
    F = p.f_jet(pts, order)
    return DerivedFields(a=A, ta=ta, tf=-(F / A), f=F)


def _bad_location(pts, a0):
    flat_a = np.ravel(a0)
    i = int(np.flatnonzero(~(flat_a > 0))[0])
    flat_pts = pts.reshape(pts.shape[0], -1)
    loc = flat_pts[:, i].tolist()
    return loc[0] if len(loc) == 1 else loc


def load_problem_file(path):
    """Read a ``key = value`` problem file (keys dim, l1, l2, a, u or a, f, g)."""
    text = Path(path).read_text(encoding="utf-8")
    entries = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in ("dim", "l1", "l2", "a", "u", "f", "g", "name"):
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        if key in entries:
            raise UsageError(f"{path}:{lineno}: duplicate key {key!r}")
        entries[key] = value
    missing = [k for k in ("dim", "l1", "l2", "a") if k not in entries]
    if missing:
        raise UsageError(f"{path}: missing keys {', '.join(missing)}")
    try:
        dim = int(entries["dim"])
        domain = (float(entries["l1"]), float(entries["l2"]))
    except ValueError as exc:
        raise UsageError(f"{path}: {exc}") from None
    if dim < 1:
        raise UsageError(f"{path}: dim must be positive")
    name = entries.get("name", Path(path).stem)
    if "u" in entries and "f" not in entries:
        if "g" in entries:
            raise UsageError(f"{path}: give either u (manufactured) or f and g (direct)")
        return manufactured_problem(entries["a"], entries["u"], domain, dim, name=name)
    if "f" in entries and "g" in entries:
        return direct_problem(entries["a"], entries["f"], entries["g"], domain, dim, u=entries.get("u"), name=name)
    raise UsageError(f"{path}: give either u (manufactured) or f and g (direct)")
