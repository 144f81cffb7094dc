"""Compact symmetric 1D scheme of arbitrary even order for ``-(a u')' = f``.

Three-point stencil ``C_{-1} u(c-h) + C_0 u(c) + C_1 u(c+h) = f_h(c)`` whose
link coefficients are functions of ``a`` at the link midpoint only, so the
assembled matrix is symmetric.  Two auxiliary families of functions drive the
construction.  ``E_{j,1}`` and ``F_{j,k}`` express ``u^(j)`` through ``u'``
and the derivatives of ``f``:

    E_{2,1} = -a'/a,      E_{j+1,1} = E_{j,1}' - (a'/a) E_{j,1}
    F_{2,0} = 1/a,        F_{j,-1} = E_{j,1}/a,      F_{j+1,k} = F_{j,k}' + F_{j,k-1}

These tables are stored exactly as above, which is the expansion for
``(a u')' = f``.  For ``-(a u')' = f`` the source part of ``u^(j)`` flips sign,
so the right-hand side series uses ``-F``.

Link coefficient at a midpoint ``m``::

    E^M(m) = 2 a(m) / (2 + sum_{odd j=3..M+1} 2 E_{j,1}(m) / j! (h/2)^(j-1))

with the reciprocal taken as a power series in ``h`` and truncated at degree
``M``.  The twelfth-order closed form :func:`closed_form_E12` (an explicit
polynomial in ``a, a', ..., a^(10)``) serves as an independent cross-check.
"""

from dataclasses import dataclass
from fractions import Fraction
from math import factorial

import numpy as np

from .errors import SingularityError, UsageError
from .expr import Expression, evaluate_jet
from .jets import Jet1, _series_div

__all__ = [
    "RecursionTables",
    "Stencil1D",
    "recursion_tables",
    "edge_coefficient",
    "g_functions",
    "stencil_1d",
    "scheme_1d",
    "closed_form_E12",
    "closed_form_w",
    "Q_TABLE",
    "W_TERMS",
]


@dataclass(frozen=True)
class RecursionTables:
    """Jets of ``E_{j,1}`` (2 <= j <= M+1) and ``F_{j,k}`` (0 <= k <= j-2) at ``center``."""

    center: object
    order: int
    a: Jet1
    E: dict
    F: dict

    def E_value(self, j):
        return self.E[j].value

    def F_value(self, j, k):
        if k > j - 2:
            return np.zeros_like(np.asarray(self.a.value))
        return self.F[(j, k)].value


def _a_jet(a, points, order):
    if isinstance(a, Expression):
        return evaluate_jet(a, np.asarray(points, dtype=float)[np.newaxis], order)
    return a.a_jet(np.asarray(points, dtype=float)[np.newaxis], order)


def recursion_tables(a, b, M):
    """E/F recursion tables of order ``M`` at ``b`` (scalar or array of points).

    ``a`` is an :class:`Expression` in one variable or a 1D problem.
    """
    if M < 1:
        raise UsageError("order M must be positive")
    A = _a_jet(a, b, M)
    if np.any(~(np.asarray(A.value) > 0)):
        bad = np.ravel(np.asarray(b, dtype=float))[np.flatnonzero(~(np.ravel(A.value) > 0))[0]]
        raise SingularityError("coefficient a is not positive", point=float(bad))
    return _tables_from_jet(A, M)


def _tables_from_jet(A, M):
    # E_{j,1} and F_{j,k} carry order M + 1 - j, enough for value lookups at j = M + 1.
    L = A.deriv() / A.truncate(M - 1)
    E = {2: -L}
    for j in range(2, M + 1):
        Ej = E[j]
        E[j + 1] = Ej.deriv() - L.truncate(Ej.order - 1) * Ej.truncate(Ej.order - 1)
    recip_a = A.truncate(M - 1).unary("recip")
    F = {(2, 0): recip_a}
    for j in range(2, M + 1):
        order = M - j
        for k in range(0, j):
            new = None
            if k <= j - 2:
                new = F[(j, k)].deriv()
            if k == 0:
                prev = E[j].truncate(order) * recip_a.truncate(order)
            else:
                prev = F[(j, k - 1)].truncate(order)
            new = prev if new is None else new + prev
            F[(j + 1, k)] = new
    return RecursionTables(center=A.center, order=M, a=A, E=E, F=F)


def edge_coefficient(tables, h, M=None):
    """``E^M`` at the table centers for step ``h``: ``2a`` times the degree-``M`` reciprocal series."""
    M = tables.order if M is None else M
    a0 = np.asarray(tables.a.value)
    s = np.zeros((M + 1,) + a0.shape)
    s[0] = 2.0
    for j in range(3, M + 2, 2):
        s[j - 1] = 2.0 * tables.E_value(j) / factorial(j) / 2.0 ** (j - 1)
    one = np.zeros_like(s)
    one[0] = 1.0
    r = _series_div(one, s)
    acc = r[M]
    for k in range(M - 1, -1, -1):
        acc = acc * h + r[k]
    return 2.0 * a0 * acc


def g_functions(tables, h, M=None):
    """``G_k`` for ``k = 0..M-1`` at the table centers, stacked along axis 0.

    Uses the source expansion for ``-(a u')' = f``, i.e. ``-F_{j,k}``.
    """
    M = tables.order if M is None else M
    a0 = np.asarray(tables.a.value)
    G = np.zeros((M,) + a0.shape)
    for k in range(M):
        acc = 0.0
        for j in range(k + 2, M + 2):
            if (j - 1) % 2:
                continue
            acc = acc - 2.0 * tables.F_value(j, k) / factorial(j) * (h / 2.0) ** (j - k - 2)
        G[k] = acc
    return G


def _rhs_weights(c_minus, c_plus, g_minus, g_plus, M):
    """``d_l`` for ``l = 0..M-1`` (stacked along axis 0)."""
    d = np.zeros((M,) + np.shape(c_plus))
    for ell in range(M):
        scale = 2.0 ** (ell + 2)
        acc = 2.0 * ((-1) ** (ell + 1) - 1) / (scale * factorial(ell + 1))
        for k in range(ell + 1):
            sgn = (-1.0) ** (ell - k + 1)
            acc = acc + (c_minus * sgn * g_minus[k] + c_plus * g_plus[k]) / (scale * factorial(ell - k))
        d[ell] = acc
    return d


@dataclass(frozen=True)
class Stencil1D:
    center: float
    h: float
    order: int
    C_minus: float
    C_zero: float
    C_plus: float
    rhs_weights: tuple
    rhs: float

    def apply(self, u):
        """Residual ``sum C_p u(c + p h) - f_h`` for a callable ``u``."""
        c, h = self.center, self.h
        return self.C_minus * u(c - h) + self.C_zero * u(c) + self.C_plus * u(c + h) - self.rhs


def _check_order(M):
    if M < 2 or M % 2:
        raise UsageError(f"1D order must be even and >= 2, got {M}")


def _links(p, midpoints, h, M, e_source):
    tables = recursion_tables(p, midpoints, M)
    if e_source == "recursion":
        C = edge_coefficient(tables, h, M)
    elif e_source == "closed_form":
        C = _closed_form_from_jet(tables.a, h, M)
    else:
        raise UsageError(f"unknown coefficient source {e_source!r}")
    return C, g_functions(tables, h, M)


def stencil_1d(p, c, h, M, e_source="recursion"):
    """Stencil and right-hand value of the order-``M`` scheme at the point ``c``."""
    _check_order(M)
    if p.dim != 1:
        raise UsageError("stencil_1d needs a 1D problem")
    mids = np.array([c - h / 2.0, c + h / 2.0])
    C, G = _links(p, mids, h, M, e_source)
    F = p.f_jet(np.array([[c]]), M - 1)
    fd = np.array([F.partial(ell)[0] for ell in range(M)])
    d = _rhs_weights(C[0], C[1], G[:, 0], G[:, 1], M)
    rhs = float(sum(d[ell] * h ** (ell + 2) * fd[ell] for ell in range(M)))
    c_minus, c_plus = float(C[0]), float(C[1])
    return Stencil1D(
        center=float(c),
        h=float(h),
        order=M,
        C_minus=c_minus,
        C_zero=-c_plus - c_minus,
        C_plus=c_plus,
        rhs_weights=tuple(float(x) for x in d),
        rhs=rhs,
    )


def scheme_1d(p, N, M, e_source="recursion"):
    """Vectorized scheme on the uniform grid with ``N`` subdivisions.

    Returns ``(C_links, f_h)`` where ``C_links[i]`` is the coefficient of the
    link between nodes ``i`` and ``i + 1`` (evaluated once at its midpoint)
    and ``f_h[i - 1]`` is the right-hand value at interior node ``i``.
    """
    _check_order(M)
    h = (p.l2 - p.l1) / N
    mids = p.l1 + (np.arange(N) + 0.5) * h
    centers = p.l1 + np.arange(1, N) * h
    C, G = _links(p, mids, h, M, e_source)
    F = p.f_jet(centers[np.newaxis], M - 1)
    d = _rhs_weights(C[:-1], C[1:], G[:, :-1], G[:, 1:], M)
    fh = np.zeros_like(centers)
    for ell in range(M):
        fh = fh + d[ell] * h ** (ell + 2) * F.partial(ell)
    return C, fh


# ---------------------------------------------------------------------------
# explicit twelfth-order coefficient polynomial

Q_TABLE = {
    1: (-1, 12), 2: (1, 24), 3: (-1, 180), 4: (17, 1440), 5: (-1, 720), 6: (-1, 240),
    7: (1, 1920), 8: (-11, 15120), 9: (23, 10080), 10: (-137, 80640), 11: (11, 120960),
    12: (-1, 1260), 13: (31, 40320), 14: (-1, 16128), 15: (31, 161280), 16: (-1, 20160),
    17: (-1, 26880), 18: (1, 322560), 19: (-107, 907200), 20: (887, 1814400),
    21: (-377, 604800), 22: (989, 4147200), 23: (-107, 14515200), 24: (-17, 100800),
    25: (13, 37800), 26: (-193, 1612800), 27: (-1, 22400), 28: (5, 387072),
    29: (101, 2419200), 30: (-197, 3225600), 31: (17, 3225600), 32: (19, 1382400),
    33: (-1, 2073600), 34: (-1, 120960), 35: (1, 129024), 36: (-1, 829440),
    37: (1, 774144), 38: (-1, 2903040), 39: (-1, 5806080), 40: (1, 92897280),
    41: (-2549, 119750400), 42: (26263, 239500800), 43: (-94043, 479001600),
    44: (67339, 479001600), 45: (-35971, 1094860800), 46: (2549, 3832012800),
    47: (-751, 19958400), 48: (1319, 11404800), 49: (-1921, 19958400),
    50: (22313, 1277337600), 51: (-379, 22809600), 52: (39, 1971200),
    53: (-1087, 510935040), 54: (-1, 887040), 55: (37, 3942400), 56: (-541, 22809600),
    57: (7643, 567705600), 58: (-751, 1277337600), 59: (521, 79833600),
    60: (-5743, 1277337600), 61: (83, 340623360), 62: (-17669, 30656102400),
    63: (101, 958003200), 64: (-299, 159667200), 65: (601, 159667200),
    66: (-1087, 851558400), 67: (-29, 29937600), 68: (59, 218972160),
    69: (83, 567705600), 70: (-1, 162201600), 71: (193, 638668800),
    72: (-3349, 7664025600), 73: (299, 7664025600), 74: (83, 851558400),
    75: (-1, 141926400), 76: (-1, 23950080), 77: (59, 1532805120), 78: (-1, 170311680),
    79: (59, 12262440960), 80: (-1, 766402560), 81: (-1, 2043740160),
    82: (1, 40874803200),
}

# Each term of w_k is q_i * prod(a^(r) for r in orders) / a^(len(orders) - 1);
# the derivative orders of every term sum to 2k.
W_TERMS = {
    1: [(1, (1, 1)), (2, (2,))],
    2: [(3, (1, 1, 1, 1)), (4, (2, 1, 1)), (5, (2, 2)), (6, (3, 1)), (7, (4,))],
    3: [
        (8, (1,) * 6), (9, (2, 1, 1, 1, 1)), (10, (2, 2, 1, 1)), (11, (2, 2, 2)),
        (12, (3, 1, 1, 1)), (13, (3, 2, 1)), (14, (3, 3)), (15, (4, 1, 1)), (16, (4, 2)),
        (17, (5, 1)), (18, (6,)),
    ],
    4: [
        (19, (1,) * 8), (20, (2,) + (1,) * 6), (21, (2, 2) + (1,) * 4), (22, (2, 2, 2, 1, 1)),
        (23, (2, 2, 2, 2)), (24, (3,) + (1,) * 5), (25, (3, 2, 1, 1, 1)), (26, (3, 2, 2, 1)),
        (27, (3, 3, 1, 1)), (28, (3, 3, 2)), (29, (4, 1, 1, 1, 1)), (30, (4, 2, 1, 1)),
        (31, (4, 2, 2)), (32, (4, 3, 1)), (33, (4, 4)), (34, (5, 1, 1, 1)), (35, (5, 2, 1)),
        (36, (5, 3)), (37, (6, 1, 1)), (38, (6, 2)), (39, (7, 1)), (40, (8,)),
    ],
    5: [
        (41, (1,) * 10), (42, (2,) + (1,) * 8), (43, (2, 2) + (1,) * 6),
        (44, (2, 2, 2) + (1,) * 4), (45, (2, 2, 2, 2, 1, 1)), (46, (2,) * 5),
        (47, (3,) + (1,) * 7), (48, (3, 2) + (1,) * 5), (49, (3, 2, 2, 1, 1, 1)),
        (50, (3, 2, 2, 2, 1)), (51, (3, 3, 1, 1, 1, 1)), (52, (3, 3, 2, 1, 1)),
        (53, (3, 3, 2, 2)), (54, (3, 3, 3, 1)), (55, (4,) + (1,) * 6),
        (56, (4, 2, 1, 1, 1, 1)), (57, (4, 2, 2, 1, 1)), (58, (4, 2, 2, 2)),
        (59, (4, 3, 1, 1, 1)), (60, (4, 3, 2, 1)), (61, (4, 3, 3)), (62, (4, 4, 1, 1)),
        (63, (4, 4, 2)), (64, (5,) + (1,) * 5), (65, (5, 2, 1, 1, 1)), (66, (5, 2, 2, 1)),
        (67, (5, 3, 1, 1)), (68, (5, 3, 2)), (69, (5, 4, 1)), (70, (5, 5)),
        (71, (6, 1, 1, 1, 1)), (72, (6, 2, 1, 1)), (73, (6, 2, 2)), (74, (6, 3, 1)),
        (75, (6, 4)), (76, (7, 1, 1, 1)), (77, (7, 2, 1)), (78, (7, 3)), (79, (8, 1, 1)),
        (80, (8, 2)), (81, (9, 1)), (82, (10,)),
    ],
}


def q_value(i):
    num, den = Q_TABLE[i]
    return Fraction(num, den)


def closed_form_w(k, derivs):
    """``w_k`` from a sequence ``derivs[r] = a^(r)`` (scalars or arrays)."""
    a = derivs[0]
    total = 0.0
    for qi, orders in W_TERMS[k]:
        term = float(q_value(qi))
        for r in orders:
            term = term * derivs[r]
        total = total + term / a ** (len(orders) - 1)
    return total


def _closed_form_from_jet(A, h, M):
    if M < 2 or M % 2 or M > 12:
        raise UsageError("closed form is available for M in {2, 4, ..., 12}")
    if A.order < 10:
        raise UsageError("closed form needs a jet of order >= 10")
    derivs = [A.partial(r) for r in range(11)]
    out = derivs[0]
    for k in range(1, M // 2):
        out = out + closed_form_w(k, derivs) * h ** (2 * k)
    return out


def closed_form_E12(a, x, h, M=12):
    """Explicit coefficient ``a + w_1 h^2 + ... + w_{n-1} h^{2(n-1)}`` at ``x`` for ``M = 2n``."""
    A = _a_jet(a, x, 10)
    if np.any(~(np.asarray(A.value) > 0)):
        raise SingularityError("coefficient a is not positive", point=x)
    return _closed_form_from_jet(A, h, M)
