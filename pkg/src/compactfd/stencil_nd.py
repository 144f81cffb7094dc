"""Compact symmetric stencils in two or more dimensions.

Every off-center coefficient ``C_p`` is a function of the problem data at the
midpoint ``x + p h / 2``; ``C_p`` and ``C_{-p}`` use the same function, so the
coefficient of a grid link is one number no matter which endpoint asks for it.
A scheme object therefore exposes

* ``classes``: one representative offset per pair ``{p, -p}`` (first nonzero
  coordinate positive),
* ``link_coefficient(q, fields, h)``: the coefficient of class ``q`` evaluated
  from :class:`~compactfd.fields.DerivedFields` at a batch of midpoints,
* ``rhs(fields, h)``: the right-hand value ``f_h`` at a batch of nodes,
* ``sign``: the factor that makes the assembled diagonal positive.

Available schemes:

``2d-o4``  explicit fourth-order 9-point stencil in terms of ``a`` derivatives
``3d-o4``  explicit fourth-order 27-point stencil in terms of ``a`` derivatives
``dd-o4``  fourth order in any ``d >= 2`` from one-axis and two-axis pieces
``2d-o6``  sixth-order 9-point stencil, valid when ``2 lap(ta) - |grad ta|^2``
           is constant (``ta = -ln a``); other coefficients are refused
"""

from dataclasses import dataclass
from itertools import combinations, product

import numpy as np

from .errors import ConstancyGateError, UsageError
from .fields import derived_fields

__all__ = [
    "StencilInstance",
    "Scheme",
    "Scheme2DO4",
    "Scheme3DO4",
    "SchemeDDO4",
    "Scheme2DO6",
    "get_scheme",
    "stencil_instance",
    "stencil_2d_o4",
    "stencil_2d_o6",
    "stencil_3d_o4",
    "stencil_dd_o4",
    "constancy_spread",
    "GATE_RTOL",
    "ANTISYMMETRIC_TOL",
]

#: Relative tolerance of the sixth-order admissibility check.
GATE_RTOL = 1e-8
#: Bound on the (discarded) antisymmetric part of the sixth-order coefficients.
ANTISYMMETRIC_TOL = 1e-10

CHUNK = 1 << 16


@dataclass(frozen=True)
class StencilInstance:
    """Coefficients ``C_p`` for offsets ``p`` in ``{-1,0,1}^d`` and the value ``f_h`` at one node."""

    dim: int
    center: tuple
    h: float
    coefficients: dict
    rhs: float

    def residual(self, u):
        """``sum_p C_p u(x + p h) - f_h`` for a callable ``u`` taking a point array."""
        c = np.asarray(self.center, dtype=float)
        total = 0.0
        for p, cp in self.coefficients.items():
            total += cp * u(c + self.h * np.asarray(p, dtype=float))
        return total - self.rhs


def _unit(d, i):
    e = [0] * d
    e[i] = 1
    return tuple(e)


def _add(*ks):
    return tuple(sum(c) for c in zip(*ks))


def _representative(p):
    for c in p:
        if c != 0:
            return tuple(p) if c > 0 else tuple(-x for x in p)
    raise UsageError("the zero offset has no link class")


class Scheme:
    """Base class: subclasses set the attributes below and implement two methods."""

    name = ""
    dim = 0
    order = 0
    sign = 1.0
    link_order = 2
    rhs_order = 2

    @property
    def classes(self):
        raise NotImplementedError

    def link_coefficient(self, q, fields, h):
        raise NotImplementedError

    def rhs(self, fields, h):
        raise NotImplementedError

    def check_problem(self, problem, nodes):
        """Hook for admissibility checks over the grid nodes (shape ``(d, n)``)."""

    def link_values(self, problem, q, midpoints, h):
        """Coefficients of class ``q`` at ``midpoints`` (shape ``(d, n)``), chunked."""
        n = midpoints.shape[1]
        out = np.empty(n)
        for s in range(0, n, CHUNK):
            F = derived_fields(problem, midpoints[:, s : s + CHUNK], self.link_order, source=False)
            out[s : s + CHUNK] = self.link_coefficient(q, F, h)
        return out

    def rhs_values(self, problem, nodes, h):
        n = nodes.shape[1]
        out = np.empty(n)
        for s in range(0, n, CHUNK):
            F = derived_fields(problem, nodes[:, s : s + CHUNK], self.rhs_order, source=True)
            out[s : s + CHUNK] = self.rhs(F, h)
        return out


# ---------------------------------------------------------------------------
# helpers reading partial derivatives out of jets


class _Partials:
    """``D(i, j, ...)`` returns the partial derivative of a jet along the listed axes."""

    def __init__(self, jet, dim):
        self.jet = jet
        self.dim = dim

    def __call__(self, *axes):
        k = [0] * self.dim
        for ax in axes:
            k[ax] += 1
        return self.jet.partial(tuple(k))


def _source_terms_a(fields, dim):
    """``a``-form fourth-order right-hand side shared by the explicit 2D and 3D stencils."""
    A = _Partials(fields.a, dim)
    Fp = _Partials(fields.f, dim)
    a = A()
    f = Fp()
    lap_a = sum(A(i, i) for i in range(dim))
    lap_f = sum(Fp(i, i) for i in range(dim))
    grad_af = sum(A(i) * Fp(i) for i in range(dim))
    grad_a2 = sum(A(i) ** 2 for i in range(dim))
    return f, a, lap_a, lap_f, grad_af, grad_a2


def _rhs_a_form(fields, h, dim):
    f, a, lap_a, lap_f, grad_af, grad_a2 = _source_terms_a(fields, dim)
    bracket = a * (f * lap_a + grad_af) - a * a * lap_f - grad_a2 * f
    return -f * h**2 + bracket * h**4 / (12.0 * a * a)


def _rhs_tilde_form(fields, h, dim):
    T = _Partials(fields.ta, dim)
    G = _Partials(fields.tf, dim)
    a = fields.a.value
    lap = sum(G(i, i) for i in range(dim))
    adv = sum(T(i) * G(i) for i in range(dim))
    return -a * (h**2 * G() + h**4 / 12.0 * (lap - adv))


# ---------------------------------------------------------------------------
# explicit fourth-order stencils


class Scheme2DO4(Scheme):
    """Fourth-order 9-point stencil written with ``a`` and its first and second partials."""

    name = "2d-o4"
    dim = 2
    order = 4
    sign = -1.0
    link_order = 2
    rhs_order = 2

    @property
    def classes(self):
        return [(1, 0), (0, 1), (1, 1), (1, -1)]

    def link_coefficient(self, q, fields, h):
        A = _Partials(fields.a, 2)
        a, ax, ay = A(), A(0), A(1)
        axx, axy, ayy = A(0, 0), A(0, 1), A(1, 1)
        h2 = h * h
        if q == (1, 1):
            return a / 6 - ax * ay / (24 * a) * h2 + (4 * axy - axx) / 48 * h2
        if q == (1, -1):
            return a / 6 + (ax * ay / (24 * a) - axx / 48) * h2
        if q == (1, 0):
            return 2 * a / 3 - ax**2 / (12 * a) * h2 + (2 * axx - 2 * axy - ayy) / 24 * h2
        if q == (0, 1):
            return 2 * a / 3 - ay**2 / (12 * a) * h2 + (ayy - 2 * axy) / 24 * h2
        raise UsageError(f"no link class {q}")

    def rhs(self, fields, h):
        return _rhs_a_form(fields, h, 2)


class Scheme3DO4(Scheme):
    """Fourth-order 27-point stencil, transcribed term by term (including its axis asymmetries)."""

    name = "3d-o4"
    dim = 3
    order = 4
    sign = -1.0
    link_order = 2
    rhs_order = 2

    @property
    def classes(self):
        return [
            (1, 0, 0), (0, 1, 0), (0, 0, 1),
            (1, 1, 0), (1, -1, 0), (1, 0, 1), (1, 0, -1), (0, 1, 1), (0, 1, -1),
            (1, 1, 1), (1, 1, -1), (1, -1, 1), (1, -1, -1),
        ]  # fmt: skip

    def link_coefficient(self, q, fields, h):
        A = _Partials(fields.a, 3)
        a, ax, ay, az = A(), A(0), A(1), A(2)
        axx, ayy, azz = A(0, 0), A(1, 1), A(2, 2)
        axy, axz, ayz = A(0, 1), A(0, 2), A(1, 2)
        h2 = h * h
        if q == (1, 0, 0):
            return 7 * a / 15 + 0.0 * h2
        if q == (0, 1, 0):
            return 7 * a / 15 + az / (12 * a) * (ax - ay) * h2
        if q == (0, 0, 1):
            return (
                7 * a / 15
                + (2 * ax**2 - ay**2 - az**2 - ax * az - ay * az) / (12 * a) * h2
                + (ayy + azz - 3 * axx - 2 * ayz) / 24 * h2
            )
        if q == (0, 1, 1):
            return a / 10 + 0.0 * h2
        if q == (0, 1, -1):
            return a / 10 + ay * az / (12 * a) * h2
        if q == (1, 0, -1):
            return a / 10 + ax * az / (12 * a) * h2
        if q == (1, 0, 1):
            return a / 10 + (ay**2 - ax**2) / (12 * a) * h2 + (axx - ayy) / 12 * h2
        if q == (1, -1, 0):
            return (
                a / 10
                + (ax**2 + ax * ay - ax * az) / (24 * a) * h2
                + (3 * ayy - 3 * axx - azz + 2 * axz - 2 * axy - 2 * ayz) / 48 * h2
            )
        if q == (1, 1, 0):
            return (
                a / 10
                + (ax**2 - 2 * ay**2 - ax * ay - ax * az) / (24 * a) * h2
                + (axx - ayy - azz + 2 * axy - 2 * axz - 2 * ayz) / 48 * h2
            )
        if q == (1, -1, 1):
            return a / 30 - ay**2 / (24 * a) * h2
        if q == (1, 1, -1):
            return a / 30 + (ay**2 - ax**2) / (24 * a) * h2
        if q == (1, 1, 1):
            return a / 30 + (ayy + axz + ayz - axx) / 24 * h2
        if q == (1, -1, -1):
            return a / 30 - ax**2 / (24 * a) * h2 + (axx + ayz - ayy - axz) / 24 * h2
        raise UsageError(f"no link class {q}")

    def rhs(self, fields, h):
        return _rhs_a_form(fields, h, 3)


class SchemeDDO4(Scheme):
    """Fourth order in ``d >= 2`` dimensions: two-axis pieces minus ``(d - 2)`` one-axis pieces.

    Offsets with three or more nonzero coordinates get coefficient zero.
    """

    name = "dd-o4"
    order = 4
    sign = 1.0
    link_order = 2
    rhs_order = 2

    def __init__(self, dim):
        if dim < 2:
            raise UsageError("dd-o4 needs d >= 2")
        self.dim = dim

    @property
    def classes(self):
        d = self.dim
        out = [_unit(d, i) for i in range(d)]
        for i, j in combinations(range(d), 2):
            ei, ej = _unit(d, i), _unit(d, j)
            out.append(_add(ei, ej))
            out.append(tuple(x - y for x, y in zip(ei, ej)))
        return out

    def link_coefficient(self, q, fields, h):
        d = self.dim
        T = _Partials(fields.ta, d)
        a = fields.a.value
        h2 = h * h
        nz = [i for i, c in enumerate(q) if c]
        if len(nz) == 1:
            (k,) = nz
            gk, gkk = T(k), T(k, k)
            two_axis = 0.0
            for ell in range(d):
                if ell == k:
                    continue
                gl, gll = T(ell), T(ell, ell)
                two_axis = two_axis + a * (-2.0 / 3.0 + h2 / 24.0 * (gk**2 + gl**2 + gkk - gll))
            one_axis = a * (-1.0 + h2 / 24.0 * (gkk + gk**2))
            return two_axis - (d - 2) * one_axis
        if len(nz) == 2:
            i, j = nz
            sgn = 1.0 if q[i] == q[j] else -1.0
            return a * (-1.0 / 6.0 + sgn * h2 / 24.0 * T(i, j))
        raise UsageError(f"no link class {q}")

    def rhs(self, fields, h):
        return _rhs_tilde_form(fields, h, self.dim)


# ---------------------------------------------------------------------------
# sixth order in 2D


def constancy_spread(problem, points):
    """Spread (max - min) and magnitude of ``2 lap(ta) - |grad ta|^2`` over ``points``."""
    vals = []
    for s in range(0, points.shape[1], CHUNK):
        F = derived_fields(problem, points[:, s : s + CHUNK], 2, source=False)
        T = _Partials(F.ta, problem.dim)
        lap = sum(T(i, i) for i in range(problem.dim))
        grad2 = sum(T(i) ** 2 for i in range(problem.dim))
        vals.append(np.atleast_1d(2.0 * lap - grad2))
    v = np.concatenate(vals)
    return float(v.max() - v.min()), float(np.abs(v).max())


def _dx(J, *axes):
    for ax in axes:
        J = J.deriv(ax)
    return J


def _tr(*jets):
    k = min(J.order for J in jets)
    return [J.truncate(k) for J in jets]


class _EtaJets:
    """Jets of the auxiliary quantities built from ``ta`` (one order below two derivatives)."""

    def __init__(self, ta):
        tx, ty = ta.deriv(0), ta.deriv(1)
        txx, txy, tyy = tx.deriv(0), tx.deriv(1), ty.deriv(1)
        tx2, ty2, _ = _tr(tx, ty, txx)
        self.eta1 = txx * 2.0 - tx2 * tx2
        self.eta2 = tyy * 2.0 - ty2 * ty2
        self.eta3 = txy * 2.0 - tx2 * ty2
        self.eta4 = txx + tyy + (tx2 * tx2 + ty2 * ty2) * 7.0
        self.eta5 = txx - tyy


class Scheme2DO6(Scheme):
    """Sixth-order 9-point scheme for coefficients with constant ``2 lap(ta) - |grad ta|^2``.

    The coefficient formulas have an antisymmetric part proportional to
    derivatives of ``eta1 + eta2``; it vanishes when the constancy condition
    holds.  It is still evaluated, checked against ``ANTISYMMETRIC_TOL`` and then
    left out so that the assembled matrix is exactly symmetric.
    """

    name = "2d-o6"
    dim = 2
    order = 6
    sign = 1.0
    link_order = 5
    rhs_order = 4

    def __init__(self, gate_rtol=GATE_RTOL, antisymmetric_tol=ANTISYMMETRIC_TOL):
        self.gate_rtol = gate_rtol
        self.antisymmetric_tol = antisymmetric_tol

    @property
    def classes(self):
        return [(1, 0), (0, 1), (1, 1), (1, -1)]

    def check_problem(self, problem, nodes):
        spread, mag = constancy_spread(problem, nodes)
        if spread > self.gate_rtol * (1.0 + mag):
            raise ConstancyGateError(
                "2d-o6 needs 2*lap(-ln a) - |grad(-ln a)|^2 to be constant; "
                f"max-min over the grid is {spread:.6e} (tolerance {self.gate_rtol * (1.0 + mag):.3e})",
                spread,
            )

    def _phi(self, q, fields, h):
        ta = fields.ta
        T = _Partials(ta, 2)
        eta = _EtaJets(ta)
        E = lambda J, *ax: _dx(J, *ax).value  # noqa: E731
        e12 = eta.eta1 + eta.eta2
        tx, ty = T(0), T(1)
        txx, txy, tyy = T(0, 0), T(0, 1), T(1, 1)
        h2, h3, h4, h5 = h**2, h**3, h**4, h**5
        if q in ((1, 0), (0, 1)):
            grad2 = tx**2 + ty**2
            lap = txx + tyy
            grad_lap = tx * (T(0, 0, 0) + T(0, 1, 1)) + ty * (T(0, 0, 1) + T(1, 1, 1))
            bilap = T(0, 0, 0, 0) + 2 * T(0, 0, 1, 1) + T(1, 1, 1, 1)
            eta5 = eta.eta5.value
            lap_eta5 = E(eta.eta5, 0, 0) + E(eta.eta5, 1, 1)
            grad_eta5 = tx * E(eta.eta5, 0) + ty * E(eta.eta5, 1)
            common = (
                -8 * grad2**2 + 26 * grad_lap - 16 * bilap + 14 * lap**2 + 7 * grad2 * lap
                + 10 * T(0, 0, 1, 1) - 22 * txx * tyy
            )  # fmt: skip
            odd = 5 * lap * eta5 - 7 * lap_eta5 - 11 * grad2 * eta5 - 2 * grad_eta5
            if q == (1, 0):
                phi = -4 + h2 * (-11 / 60 * e12.value + 0.5 * txx) + h4 / 960 * (common + odd)
                de = E(e12, 0)
                tilde = h3 / 40 * de + h5 / 960 * (E(e12, 0, 0, 0) - 3 * txx * de)
            else:
                phi = -4 + h2 * (-11 / 60 * e12.value + 0.5 * tyy) + h4 / 960 * (common - odd)
                de = E(e12, 1)
                tilde = h3 / 40 * de + h5 / 960 * (E(e12, 1, 1, 1) - 3 * tyy * de)
            return phi, tilde
        eta4 = eta.eta4.value
        corr = E(e12 * 4.0 + eta.eta4, 0, 1) - 3 * txy * eta4
        if q == (1, 1):
            return -1 + h2 * (eta4 / 120 + 0.25 * txy) + h4 / 1440 * corr, 0.0
        if q == (1, -1):
            return -1 + h2 * (eta4 / 120 - 0.25 * txy) - h4 / 1440 * corr, 0.0
        raise UsageError(f"no link class {q}")

    def link_coefficient(self, q, fields, h):
        a = fields.a.value
        phi, tilde = self._phi(q, fields, h)
        sym = a * phi
        anti = np.abs(a * tilde)
        bound = self.antisymmetric_tol * np.maximum(1.0, np.abs(sym))
        if np.any(anti > bound):
            worst = float(np.max(anti))
            raise ConstancyGateError(
                f"antisymmetric part of the 2d-o6 coefficients is {worst:.3e}, above {self.antisymmetric_tol:.0e}",
                worst,
            )
        return sym

    def rhs(self, fields, h):
        ta, tf = fields.ta, fields.tf
        T = _Partials(ta, 2)
        G = _Partials(tf, 2)
        eta = _EtaJets(ta)
        E = lambda J, *ax: _dx(J, *ax).value  # noqa: E731
        e1, e2, e3 = eta.eta1.value, eta.eta2.value, eta.eta3.value
        tx, ty = T(0), T(1)
        g = G()
        gx, gy = G(0), G(1)
        gxx, gxy, gyy = G(0, 0), G(0, 1), G(1, 1)
        h6_bracket = (
            -4 * (G(0, 0, 0, 0) + 4 * G(0, 0, 1, 1) + G(1, 1, 1, 1))
            + 8 * (tx * G(0, 0, 0) + 2 * ty * G(0, 0, 1) + 2 * tx * G(0, 1, 1) + ty * G(1, 1, 1))
            + ((e1 - e2) * (gxx - gyy) + 16 * e3 * gxy)
            + (tx * (3 * e1 + e2) - 2 * (E(eta.eta1, 0) - E(eta.eta2, 0))) * gx
            + (ty * (e1 + 3 * e2) + 2 * (E(eta.eta1, 1) - E(eta.eta2, 1))) * gy
            + (
                0.25 * (e1**2 + e2**2)
                + tx * (2 * E(eta.eta1, 0) + E(eta.eta2, 0))
                + ty * (E(eta.eta1, 1) + 2 * E(eta.eta2, 1))
                - (2 * E(eta.eta1, 0, 0) + E(eta.eta2, 0, 0))
                - (E(eta.eta1, 1, 1) + 2 * E(eta.eta2, 1, 1))
            )
            * g
        )
        a = fields.a.value
        return -a * (
            6 * h**2 * g
            + 0.5 * h**4 * (gxx + gyy - tx * gx - ty * gy + 0.1 * (e1 + e2) * g)
            - h**6 / 240 * h6_bracket
        )


SCHEMES = {
    "2d-o4": Scheme2DO4,
    "3d-o4": Scheme3DO4,
    "2d-o6": Scheme2DO6,
}


def get_scheme(name, dim=None):
    """Scheme object for a selector ``2d-o4 | 2d-o6 | 3d-o4 | dd-o4``."""
    if name == "dd-o4":
        if dim is None:
            raise UsageError("dd-o4 needs the dimension")
        return SchemeDDO4(dim)
    try:
        scheme = SCHEMES[name]()
    except KeyError:
        raise UsageError(f"unknown scheme {name!r}") from None
    if dim is not None and dim != scheme.dim:
        raise UsageError(f"scheme {name} is for d={scheme.dim}, problem has d={dim}")
    return scheme


def stencil_instance(scheme, problem, center, h, check=True):
    """Evaluate ``scheme`` at a single node, each coefficient at its own midpoint."""
    d = scheme.dim
    if problem.dim != d:
        raise UsageError(f"scheme {scheme.name} is for d={d}, problem has d={problem.dim}")
    c = np.asarray(center, dtype=float).reshape(d)
    if check:
        block = np.array([c + h * np.asarray(p) for p in product((-1, 0, 1), repeat=d)]).T
        scheme.check_problem(problem, block)
    coeffs = {}
    for q in scheme.classes:
        qa = np.asarray(q, dtype=float)
        mids = np.stack([c + qa * h / 2, c - qa * h / 2], axis=1)
        vals = scheme.link_values(problem, q, mids, h)
        coeffs[q] = float(vals[0])
        coeffs[tuple(-x for x in q)] = float(vals[1])
    for p in product((-1, 0, 1), repeat=d):
        if any(p) and p not in coeffs:
            coeffs[p] = 0.0
    coeffs[(0,) * d] = -sum(v for p, v in coeffs.items() if any(p))
    rhs = float(scheme.rhs_values(problem, c[:, np.newaxis], h)[0])
    return StencilInstance(dim=d, center=tuple(c.tolist()), h=float(h), coefficients=coeffs, rhs=rhs)


def stencil_2d_o4(p, center, h):
    return stencil_instance(Scheme2DO4(), p, center, h)


def stencil_2d_o6(p, center, h):
    return stencil_instance(Scheme2DO6(), p, center, h)


def stencil_3d_o4(p, center, h):
    return stencil_instance(Scheme3DO4(), p, center, h)


def stencil_dd_o4(p, center, h, d=None):
    return stencil_instance(SchemeDDO4(p.dim if d is None else d), p, center, h)
