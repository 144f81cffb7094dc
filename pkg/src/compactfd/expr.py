"""A small expression language for problem data.

Grammar (lowest to highest precedence)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := primary ('^' unary)?          # right-associative
    primary := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

Names are the variables ``x, y, z`` (or ``x1 .. xd``), the constants ``pi`` and
``e``, and the functions ``exp ln sin cos tan tanh sqrt``.  A power whose
exponent is an integer literal stays a power node (evaluated by repeated
squaring); any other exponent is rewritten to ``exp(rhs * ln(lhs))``.
"""

import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParseError, SingularityError, UsageError
from .jets import Jet1, JetN

__all__ = [
    "Expression",
    "Num",
    "Var",
    "Neg",
    "BinOp",
    "IntPow",
    "Call",
    "parse",
    "evaluate",
    "evaluate_jet",
    "FUNCTIONS",
]

FUNCTIONS = ("exp", "ln", "sin", "cos", "tan", "tanh", "sqrt")
_AXIS_NAMES = ("x", "y", "z")


class Expression:
    """Base class of the immutable expression tree."""

    __slots__ = ()

    def __str__(self):
        return self.pretty()

    def max_var(self):
        """Largest variable index referenced, or -1."""
        return max((c.max_var() for c in self.children()), default=-1)

    def children(self):
        return ()


@dataclass(frozen=True)
class Num(Expression):
    value: float

    def pretty(self):
        return repr(float(self.value))


@dataclass(frozen=True)
class Var(Expression):
    index: int

    def pretty(self):
        return _AXIS_NAMES[self.index] if self.index < 3 else f"x{self.index + 1}"

    def max_var(self):
        return self.index


@dataclass(frozen=True)
class Neg(Expression):
    arg: Expression

    def pretty(self):
        return f"(-{self.arg.pretty()})"

    def children(self):
        return (self.arg,)


@dataclass(frozen=True)
class BinOp(Expression):
    op: str
    left: Expression
    right: Expression

    def pretty(self):
        return f"({self.left.pretty()} {self.op} {self.right.pretty()})"

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class IntPow(Expression):
    base: Expression
    exponent: int

    def pretty(self):
        n = self.exponent
        exp_text = str(n) if n >= 0 else f"(-{-n})"
        return f"({self.base.pretty()})^{exp_text}"

    def children(self):
        return (self.base,)


@dataclass(frozen=True)
class Call(Expression):
    fn: str
    arg: Expression

    def pretty(self):
        return f"{self.fn}({self.arg.pretty()})"

    def children(self):
        return (self.arg,)


_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text):
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        start = m.start(m.lastgroup)
        tokens.append((m.lastgroup, m.group(m.lastgroup), start))
        pos = m.end()
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, text, dim):
        self.text = text
        self.dim = dim
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, pos = self.take()
        if val != value:
            found = "end of input" if kind == "end" else repr(val)
            raise ParseError(f"expected {value!r}, found {found}", pos)

    def parse(self):
        node = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected {val!r}", pos)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Neg(self.unary())
        if self.peek()[:2] == ("op", "+"):
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.primary()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            exponent = self.unary()
            n = _integer_literal(exponent)
            if n is not None:
                return IntPow(base, n)
            return Call("exp", BinOp("*", exponent, Call("ln", base)))
        return base

    def primary(self):
        kind, val, pos = self.take()
        if kind == "num":
            return Num(float(val))
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect(")")
            return node
        if kind == "name":
            if val in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(val, arg)
            if val == "pi":
                return Num(math.pi)
            if val == "e":
                return Num(math.e)
            index = _variable_index(val)
            if index is None:
                raise ParseError(f"unknown identifier {val!r}", pos)
            if index >= self.dim:
                raise ParseError(f"variable {val!r} exceeds dimension {self.dim}", pos)
            return Var(index)
        if kind == "end":
            raise ParseError("unexpected end of input", pos)
        raise ParseError(f"unexpected {val!r}", pos)


def _integer_literal(node):
    if isinstance(node, Num) and float(node.value).is_integer():
        return int(node.value)
    if isinstance(node, Neg):
        n = _integer_literal(node.arg)
        return None if n is None else -n
    return None


def _variable_index(name):
    if name in _AXIS_NAMES:
        return _AXIS_NAMES.index(name)
    m = re.fullmatch(r"x([1-9]\d*)", name)
    if m:
        return int(m.group(1)) - 1
    return None


def parse(text, dim):
    """Parse ``text`` into an :class:`Expression` over ``dim`` variables."""
    if dim < 1:
        raise UsageError("dimension must be positive")
    return _Parser(text, dim).parse()


# ---------------------------------------------------------------------------
# scalar / vectorized evaluation


def _point_array(point, dim=None):
    arr = np.asarray(point, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if dim is not None and arr.shape[0] != dim:
        raise UsageError(f"point has dimension {arr.shape[0]}, expected {dim}")
    return arr


def _collapse(value):
    if isinstance(value, np.ndarray) and value.ndim == 0:
        return float(value)
    return value


def evaluate(e, point):
    """Evaluate ``e`` at ``point``.

    ``point`` is a length-d sequence, or an array of shape ``(d, *batch)`` for
    vectorized evaluation over many points.
    """
    pts = _point_array(point)
    if e.max_var() >= pts.shape[0]:
        raise UsageError(f"expression uses {e.max_var() + 1} variables, point has {pts.shape[0]}")
    with np.errstate(all="ignore"):
        return _collapse(_eval(e, pts))


def _eval(e, pts):
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        return pts[e.index]
    if isinstance(e, Neg):
        return -_eval(e.arg, pts)
    if isinstance(e, BinOp):
        a = _eval(e.left, pts)
        b = _eval(e.right, pts)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if np.any(np.asarray(b) == 0):
            raise DomainError(f"division by zero in {e.pretty()}")
        return np.divide(a, b)
    if isinstance(e, IntPow):
        b = _eval(e.base, pts)
        if e.exponent < 0 and np.any(np.asarray(b) == 0):
            raise DomainError(f"zero raised to a negative power in {e.pretty()}")
        return np.power(np.asarray(b, dtype=float), float(e.exponent))
    if isinstance(e, Call):
        x = np.asarray(_eval(e.arg, pts), dtype=float)
        if e.fn == "ln":
            if np.any(x <= 0):
                raise DomainError(f"ln of nonpositive value in {e.pretty()}")
            return np.log(x)
        if e.fn == "sqrt":
            if np.any(x < 0):
                raise DomainError(f"sqrt of negative value in {e.pretty()}")
            return np.sqrt(x)
        return getattr(np, e.fn)(x)
    raise UsageError(f"unknown node {e!r}")


# ---------------------------------------------------------------------------
# jet evaluation


def evaluate_jet(e, point, order):
    """Forward-evaluate ``e`` in jet arithmetic at ``point``.

    Returns a :class:`Jet1` for one variable and a :class:`JetN` otherwise.
    ``point`` may carry batch axes after the coordinate axis.
    """
    pts = _point_array(point)
    dim = pts.shape[0]
    if e.max_var() >= dim:
        raise UsageError(f"expression uses {e.max_var() + 1} variables, point has {dim}")
    if dim == 1:
        center = pts[0]
        seeds = [Jet1.variable(center, order)]
        template = Jet1.constant(center, 0.0, order)
    else:
        center = pts
        seeds = [JetN.variable(center, i, order) for i in range(dim)]
        template = JetN.constant(center, 0.0, order)
    with np.errstate(all="ignore"):
        out = _eval_jet(e, seeds, {})
    if not isinstance(out, (Jet1, JetN)):
        out = template + out
    return out


def _eval_jet(e, seeds, memo):
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        return seeds[e.index]
    key = id(e)
    if key in memo:
        return memo[key][1]
    result = _eval_jet_node(e, seeds, memo)
    memo[key] = (e, result)
    return result


def _eval_jet_node(e, seeds, memo):
    if isinstance(e, Neg):
        return -_eval_jet(e.arg, seeds, memo)
    if isinstance(e, BinOp):
        a = _eval_jet(e.left, seeds, memo)
        b = _eval_jet(e.right, seeds, memo)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if not isinstance(b, (Jet1, JetN)):
            if np.any(np.asarray(b) == 0):
                raise DomainError(f"division by zero in {e.pretty()}")
            return a / b
        try:
            return a / b
        except SingularityError as exc:
            raise SingularityError(f"{exc} in {e.pretty()}") from None
    if isinstance(e, IntPow):
        b = _eval_jet(e.base, seeds, memo)
        if not isinstance(b, (Jet1, JetN)):
            if e.exponent < 0 and np.any(np.asarray(b) == 0):
                raise DomainError(f"zero raised to a negative power in {e.pretty()}")
            return np.power(np.asarray(b, dtype=float), float(e.exponent))
        return b ** e.exponent
    if isinstance(e, Call):
        x = _eval_jet(e.arg, seeds, memo)
        if not isinstance(x, (Jet1, JetN)):
            return _eval(e, None)
        try:
            return x.unary(e.fn)
        except SingularityError as exc:
            raise SingularityError(f"{exc} in {e.pretty()}") from None
    raise UsageError(f"unknown node {e!r}")
