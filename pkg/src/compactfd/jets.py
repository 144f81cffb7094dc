"""Truncated Taylor arithmetic ("jets") at a point.

A jet stores the normalized Taylor coefficients ``d^k f(center) / k!`` of a
smooth function up to a fixed order.  Arithmetic on jets propagates those
coefficients exactly up to the truncation order, which is how every stencil
formula in this package obtains derivatives of the coefficient ``a`` and the
source ``f``.

Coefficient storage is batched: ``coeffs`` has shape ``(n_terms, *batch)`` so
one jet object carries the expansions at many points at once (for example at
every midpoint of a grid).  A jet with an empty batch shape is an ordinary
single-point jet.

Univariate composition uses the classical power-series recurrences obtained by
differentiating ``g = fn(a)`` once and matching coefficients:

==========  ===============================================================
exp         ``k b_k = sum_{j=1..k} j a_j b_{k-j}``                 (b' = a' b)
ln          ``k a_0 b_k = k a_k - sum_{j=1..k-1} j b_j a_{k-j}``   (a b' = a')
sin, cos    ``k s_k = sum j a_j c_{k-j}``, ``k c_k = -sum j a_j s_{k-j}``
tan         ``k t_k = sum j a_j s_{k-j}`` with ``s = 1 + t^2``      (t' = s a')
tanh        same as tan with ``s = 1 - t^2``
sqrt        ``2 b_0 b_k = a_k - sum_{j=1..k-1} b_j b_{k-j}``       (b^2 = a)
reciprocal  ``b_0 c_k = -sum_{j=1..k} b_j c_{k-j}``                (b c = 1)
integer ^   repeated squaring with truncated products
==========  ===============================================================

For multivariate jets the same recurrences produce the univariate series
``fn(a_0 + t)``, which is then composed with the nilpotent part ``A - a_0`` by
Horner's rule.
"""

from functools import lru_cache
from itertools import product
from math import factorial, prod

import numpy as np

from .errors import SingularityError, UsageError

__all__ = ["Jet1", "JetN", "MAX_ORDER_ND", "jet_binary", "jet_unary", "jet_partial"]

#: Highest total order accepted for jets in two or more variables.  The
#: sixth-order 2D scheme needs fifth partials of ``-ln a`` and fourth partials
#: of ``f``, which for manufactured data means sixth-order jets of ``u``.
MAX_ORDER_ND = 8

UNARY_FUNCTIONS = ("exp", "ln", "sin", "cos", "tan", "tanh", "sqrt", "neg")


# ---------------------------------------------------------------------------
# univariate series kernels on coefficient stacks of shape (K + 1, *batch)


def _series_mul(a, b):
    K = a.shape[0] - 1
    out = np.zeros(np.broadcast_shapes(a.shape, b.shape))
    for k in range(K + 1):
        acc = a[0] * b[k]
        for j in range(1, k + 1):
            acc = acc + a[j] * b[k - j]
        out[k] = acc
    return out


def _series_div(a, b):
    b0 = b[0]
    if np.any(b0 == 0):
        raise SingularityError("division by a jet with zero constant term")
    K = a.shape[0] - 1
    out = np.zeros(np.broadcast_shapes(a.shape, b.shape))
    for k in range(K + 1):
        acc = a[k]
        for j in range(1, k + 1):
            acc = acc - b[j] * out[k - j]
        out[k] = acc / b0
    return out


def _series_exp(a):
    out = np.empty_like(a)
    out[0] = np.exp(a[0])
    for k in range(1, a.shape[0]):
        acc = a[1] * out[k - 1]
        for j in range(2, k + 1):
            acc = acc + j * a[j] * out[k - j]
        out[k] = acc / k
    return out


def _series_ln(a):
    a0 = a[0]
    if np.any(a0 <= 0):
        raise SingularityError("ln of a jet with nonpositive constant term")
    out = np.empty_like(a)
    out[0] = np.log(a0)
    for k in range(1, a.shape[0]):
        acc = k * a[k]
        for j in range(1, k):
            acc = acc - j * out[j] * a[k - j]
        out[k] = acc / (k * a0)
    return out


def _series_sincos(a):
    s = np.empty_like(a)
    c = np.empty_like(a)
    s[0] = np.sin(a[0])
    c[0] = np.cos(a[0])
    for k in range(1, a.shape[0]):
        acc_s = a[1] * c[k - 1]
        acc_c = a[1] * s[k - 1]
        for j in range(2, k + 1):
            acc_s = acc_s + j * a[j] * c[k - j]
            acc_c = acc_c + j * a[j] * s[k - j]
        s[k] = acc_s / k
        c[k] = -acc_c / k
    return s, c


def _series_tan_like(a, sign):
    # t' = (1 + sign * t^2) a'
    t = np.empty_like(a)
    s = np.empty_like(a)
    t[0] = np.tan(a[0]) if sign > 0 else np.tanh(a[0])
    s[0] = 1.0 + sign * t[0] * t[0]
    for k in range(1, a.shape[0]):
        acc = a[1] * s[k - 1]
        for j in range(2, k + 1):
            acc = acc + j * a[j] * s[k - j]
        t[k] = acc / k
        sq = t[0] * t[k]
        for i in range(1, k + 1):
            sq = sq + t[i] * t[k - i]
        s[k] = sign * sq
    return t


def _series_sqrt(a):
    a0 = a[0]
    if np.any(a0 <= 0):
        raise SingularityError("sqrt of a jet with nonpositive constant term")
    out = np.empty_like(a)
    out[0] = np.sqrt(a0)
    for k in range(1, a.shape[0]):
        acc = a[k]
        for j in range(1, k):
            acc = acc - out[j] * out[k - j]
        out[k] = acc / (2.0 * out[0])
    return out


def _series_unary(fn, a):
    if fn == "exp":
        return _series_exp(a)
    if fn == "ln":
        return _series_ln(a)
    if fn == "sin":
        return _series_sincos(a)[0]
    if fn == "cos":
        return _series_sincos(a)[1]
    if fn == "tan":
        if np.any(np.cos(a[0]) == 0):
            raise SingularityError("tan of a jet at a pole")
        return _series_tan_like(a, 1.0)
    if fn == "tanh":
        return _series_tan_like(a, -1.0)
    if fn == "sqrt":
        return _series_sqrt(a)
    if fn == "recip":
        one = np.zeros_like(a)
        one[0] = 1.0
        return _series_div(one, a)
    if fn == "neg":
        return -a
    raise UsageError(f"unknown jet function {fn!r}")


def _powi(x, n):
    if n == 0:
        return x * 0.0 + 1.0
    if n < 0:
        return 1.0 / _powi(x, -n)
    result = None
    base = x
    while n:
        if n & 1:
            result = base if result is None else result * base
        n >>= 1
        if n:
            base = base * base
    return result


def _same_center(c1, c2):
    return c1 is c2 or np.array_equal(c1, c2)


def _as_const(value):
    if isinstance(value, (int, float, np.floating, np.integer)):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.astype(float, copy=False)
    return None


class _JetBase:
    __array_ufunc__ = None  # make ndarray (op) jet defer to the jet

    def __neg__(self):
        return self._new(-self.coeffs)

    def __pos__(self):
        return self

    def __add__(self, other):
        c = _as_const(other)
        if c is not None:
            out = self.coeffs.copy() if np.ndim(c) == 0 else self.coeffs + 0.0 * c
            out[0] = out[0] + c
            return self._new(out)
        self._check(other)
        return self._new(self.coeffs + other.coeffs)

    __radd__ = __add__

    def __sub__(self, other):
        c = _as_const(other)
        if c is not None:
            return self + (-c)
        self._check(other)
        return self._new(self.coeffs - other.coeffs)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        c = _as_const(other)
        if c is not None:
            return self._new(self.coeffs * c)
        self._check(other)
        return self._mul(other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        c = _as_const(other)
        if c is not None:
            if np.any(np.asarray(c) == 0):
                raise SingularityError("division of a jet by zero")
            return self._new(self.coeffs / c)
        self._check(other)
        return self._div(other)

    def __rtruediv__(self, other):
        return self.unary("recip") * other

    def __pow__(self, n):
        if not isinstance(n, (int, np.integer)):
            raise UsageError("jets support integer powers only; use exp(y*ln(x))")
        return _powi(self, int(n))

    def exp(self):
        return self.unary("exp")

    def ln(self):
        return self.unary("ln")

    def sin(self):
        return self.unary("sin")

    def cos(self):
        return self.unary("cos")

    def tan(self):
        return self.unary("tan")

    def tanh(self):
        return self.unary("tanh")

    def sqrt(self):
        return self.unary("sqrt")

    @property
    def value(self):
        """Function value at the center (the zeroth coefficient)."""
        return self.coeffs[0]

    @property
    def batch_shape(self):
        return self.coeffs.shape[1:]


class Jet1(_JetBase):
    """Univariate jet of arbitrary order.

    ``coeffs[k]`` holds ``f^(k)(center) / k!``; ``coeffs`` may carry trailing
    batch axes, in which case ``center`` has the batch shape.
    """

    __slots__ = ("center", "coeffs")

    def __init__(self, center, coeffs):
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.ndim == 0:
            raise UsageError("Jet1 needs at least one coefficient")
        self.center = center
        self.coeffs = coeffs

    @classmethod
    def variable(cls, center, order):
        """Jet of the identity function ``x -> x`` at ``center``."""
        center = np.asarray(center, dtype=float)
        coeffs = np.zeros((order + 1,) + center.shape)
        coeffs[0] = center
        if order >= 1:
            coeffs[1] = 1.0
        return cls(center, coeffs)

    @classmethod
    def constant(cls, center, value, order):
        center = np.asarray(center, dtype=float)
        coeffs = np.zeros((order + 1,) + center.shape)
        coeffs[0] = value
        return cls(center, coeffs)

    @property
    def order(self):
        return self.coeffs.shape[0] - 1

    def _new(self, coeffs):
        return Jet1(self.center, coeffs)

    def _check(self, other):
        if not isinstance(other, Jet1):
            raise UsageError(f"cannot combine Jet1 with {type(other).__name__}")
        if other.order != self.order:
            raise UsageError(f"jet order mismatch: {self.order} vs {other.order}")
        if not _same_center(self.center, other.center):
            raise UsageError("jet centers differ")

    def _mul(self, other):
        return self._new(_series_mul(self.coeffs, other.coeffs))

    def _div(self, other):
        return self._new(_series_div(self.coeffs, other.coeffs))

    def unary(self, fn):
        return self._new(_series_unary(fn, self.coeffs))

    def deriv(self, axis=0):
        """Jet of the derivative, one order lower (coefficient shift)."""
        if axis != 0:
            raise UsageError("Jet1 has a single axis")
        if self.order == 0:
            raise UsageError("cannot differentiate an order-0 jet")
        k = np.arange(1, self.order + 1, dtype=float).reshape((-1,) + (1,) * len(self.batch_shape))
        return self._new(self.coeffs[1:] * k)

    def truncate(self, order):
        if order > self.order:
            raise UsageError(f"cannot raise jet order {self.order} to {order}")
        return self._new(self.coeffs[: order + 1].copy())

    def partial(self, k):
        """``d^k f(center)``."""
        if isinstance(k, tuple):
            if len(k) != 1:
                raise UsageError("Jet1 partial takes a single index")
            (k,) = k
        if k < 0 or k > self.order:
            raise UsageError(f"derivative order {k} exceeds jet order {self.order}")
        return self.coeffs[k] * factorial(k)

    def __call__(self, t):
        """Evaluate the truncated Taylor polynomial at ``center + t``."""
        acc = self.coeffs[-1]
        for c in self.coeffs[-2::-1]:
            acc = acc * t + c
        return acc

    def __repr__(self):
        return f"Jet1(center={self.center!r}, coeffs={self.coeffs.tolist()!r})"


@lru_cache(maxsize=None)
def _monomials(dim, order):
    """Multi-indices with total degree <= order, sorted by degree then lexicographically."""
    monos = [m for m in product(range(order + 1), repeat=dim) if sum(m) <= order]
    monos.sort(key=lambda m: (sum(m), tuple(-x for x in m)))
    return tuple(monos)


@lru_cache(maxsize=None)
def _index(dim, order):
    return {m: i for i, m in enumerate(_monomials(dim, order))}


@lru_cache(maxsize=None)
def _mul_table(dim, order):
    """For each left monomial i: (target indices, right indices) with deg sum <= order."""
    monos = _monomials(dim, order)
    idx = _index(dim, order)
    table = []
    for i, mi in enumerate(monos):
        targets, rights = [], []
        for j, mj in enumerate(monos):
            if sum(mi) + sum(mj) <= order:
                targets.append(idx[tuple(x + y for x, y in zip(mi, mj))])
                rights.append(j)
        table.append((i, np.array(targets), np.array(rights)))
    return tuple(table)


@lru_cache(maxsize=None)
def _deriv_table(dim, order, axis):
    """Source indices and multipliers for d/dx_axis, mapping an order-K jet to order K-1."""
    src_idx = _index(dim, order)
    src, mult = [], []
    for m in _monomials(dim, order - 1):
        up = list(m)
        up[axis] += 1
        src.append(src_idx[tuple(up)])
        mult.append(float(up[axis]))
    return np.array(src), np.array(mult)


@lru_cache(maxsize=None)
def _truncate_table(dim, order):
    return len(_monomials(dim, order))


class JetN(_JetBase):
    """Jet in ``dim`` variables with total-degree truncation.

    ``coeffs[i]`` is the coefficient of the i-th monomial of
    :func:`monomials` (``d^k f(center) / k!`` with ``k! = prod k_j!``).
    ``center`` has shape ``(dim, *batch)``.
    """

    __slots__ = ("dim", "order", "center", "coeffs")

    def __init__(self, dim, order, center, coeffs):
        if order > MAX_ORDER_ND:
            raise UsageError(f"multivariate jets are capped at order {MAX_ORDER_ND}")
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape[0] != len(_monomials(dim, order)):
            raise UsageError("coefficient count does not match (dim, order)")
        self.dim = dim
        self.order = order
        self.center = center
        self.coeffs = coeffs

    @staticmethod
    def monomials(dim, order):
        return _monomials(dim, order)

    @classmethod
    def variable(cls, center, axis, order):
        """Jet of the coordinate function ``x -> x[axis]``."""
        center = np.asarray(center, dtype=float)
        dim = center.shape[0]
        coeffs = np.zeros((len(_monomials(dim, order)),) + center.shape[1:])
        coeffs[0] = center[axis]
        if order >= 1:
            e = [0] * dim
            e[axis] = 1
            coeffs[_index(dim, order)[tuple(e)]] = 1.0
        return cls(dim, order, center, coeffs)

    @classmethod
    def constant(cls, center, value, order):
        center = np.asarray(center, dtype=float)
        dim = center.shape[0]
        coeffs = np.zeros((len(_monomials(dim, order)),) + center.shape[1:])
        coeffs[0] = value
        return cls(dim, order, center, coeffs)

    def _new(self, coeffs):
        return JetN(self.dim, self.order, self.center, coeffs)

    def _check(self, other):
        if not isinstance(other, JetN):
            raise UsageError(f"cannot combine JetN with {type(other).__name__}")
        if other.dim != self.dim or other.order != self.order:
            raise UsageError(
                f"jet shape mismatch: (dim {self.dim}, order {self.order}) "
                f"vs (dim {other.dim}, order {other.order})"
            )
        if not _same_center(self.center, other.center):
            raise UsageError("jet centers differ")

    def _mul(self, other):
        a, b = self.coeffs, other.coeffs
        out = np.zeros(np.broadcast_shapes(a.shape, b.shape))
        for i, targets, rights in _mul_table(self.dim, self.order):
            out[targets] += a[i] * b[rights]
        return self._new(out)

    def _div(self, other):
        return self._mul(other.unary("recip"))

    def unary(self, fn):
        if fn == "neg":
            return -self
        K = self.order
        a0 = self.coeffs[0]
        seed = np.zeros((K + 1,) + a0.shape)
        seed[0] = a0
        if K >= 1:
            seed[1] = 1.0
        series = _series_unary(fn, seed)
        if K == 0:
            return self._new(series[:1].copy())
        nil = self.coeffs.copy()
        nil[0] = 0.0
        nil = self._new(nil)
        acc = self._new(np.zeros_like(self.coeffs))
        acc.coeffs[0] = series[K]
        for k in range(K - 1, -1, -1):
            acc = acc._mul(nil)
            acc.coeffs[0] = acc.coeffs[0] + series[k]
        return acc

    def deriv(self, axis):
        """Jet of ``d f / d x_axis``, one order lower."""
        if self.order == 0:
            raise UsageError("cannot differentiate an order-0 jet")
        if not 0 <= axis < self.dim:
            raise UsageError(f"axis {axis} out of range for dim {self.dim}")
        src, mult = _deriv_table(self.dim, self.order, axis)
        mult = mult.reshape((-1,) + (1,) * len(self.batch_shape))
        return JetN(self.dim, self.order - 1, self.center, self.coeffs[src] * mult)

    def truncate(self, order):
        if order > self.order:
            raise UsageError(f"cannot raise jet order {self.order} to {order}")
        n = _truncate_table(self.dim, order)
        return JetN(self.dim, order, self.center, self.coeffs[:n].copy())

    def coefficient(self, k):
        k = tuple(k)
        if len(k) != self.dim:
            raise UsageError(f"multi-index {k} has wrong dimension for dim {self.dim}")
        if sum(k) > self.order or min(k) < 0:
            raise UsageError(f"|k| = {sum(k)} exceeds jet order {self.order}")
        return self.coeffs[_index(self.dim, self.order)[k]]

    def partial(self, k):
        """``d^k f(center)`` for a multi-index ``k``."""
        return self.coefficient(k) * prod(factorial(x) for x in k)

    def __repr__(self):
        return f"JetN(dim={self.dim}, order={self.order}, coeffs={self.coeffs.tolist()!r})"


def jet_binary(op, A, B):
    """Apply ``op`` in {'add', 'sub', 'mul', 'div'} to two jets."""
    if op == "add":
        return A + B
    if op == "sub":
        return A - B
    if op == "mul":
        return A * B
    if op == "div":
        return A / B
    raise UsageError(f"unknown jet operation {op!r}")


def jet_unary(fn, A, n=None):
    """Apply a named function; ``fn='pow'`` takes the integer exponent ``n``."""
    if fn == "pow":
        if n is None:
            raise UsageError("pow needs an integer exponent")
        return A ** int(n)
    if fn not in UNARY_FUNCTIONS:
        raise UsageError(f"unknown jet function {fn!r}")
    return A.unary(fn)


def jet_partial(A, k):
    return A.partial(k)
