"""Exact dimension counts for compact stencils.

For a constant-coefficient expansion of ``u(x + p h)`` in the reduced set of
derivatives ``Pi_M = {l : l_1 <= 1, |l| <= M}`` (``d^2/dx_1^2`` eliminated via
the PDE), the leading-order constraints on the stencil weights ``c_p`` read

    sum_{p in S} A_l(p) c_p = 0      for every l in Pi_{M+1},

with ``A_l(p) = sum_{|k|=|l|} p^k / k! * At(k, l)`` and ``At`` defined by

    At(k, l) = [k == l]                                   if k_1 <= 1
    At(k, l) = -sum_{j>=2} At(k - 2 e_1 + 2 e_j, l)       otherwise.

``K_M`` is the nullity of that system.  Rows are scaled by ``|l|!`` so every
entry is an integer, and the rank comes from fraction-free (Bareiss)
elimination on Python integers.
"""

from fractions import Fraction
from functools import lru_cache
from itertools import product
from math import factorial, prod

from .errors import UsageError

__all__ = [
    "tilde_A_constant",
    "A_entry",
    "reduced_indices",
    "stencil_offsets",
    "constraint_matrix",
    "constraint_nullity",
    "nullity_table",
    "integer_rank",
    "closed_form_check_2d",
    "removable_points",
]


@lru_cache(maxsize=None)
def _tilde_A(k, ell):
    if k[0] <= 1:
        return Fraction(int(k == ell))
    total = Fraction(0)
    for j in range(1, len(k)):
        kk = list(k)
        kk[0] -= 2
        kk[j] += 2
        total -= _tilde_A(tuple(kk), ell)
    return total


def tilde_A_constant(d, k, ell):
    """``At(k, l)`` for ``|k| = |l|`` and ``l_1 <= 1`` as an exact :class:`~fractions.Fraction`."""
    k, ell = tuple(int(x) for x in k), tuple(int(x) for x in ell)
    if len(k) != d or len(ell) != d:
        raise UsageError("multi-indices must have length d")
    if min(k + ell) < 0:
        raise UsageError("multi-indices must be nonnegative")
    if sum(k) != sum(ell):
        raise UsageError("tilde_A_constant needs |k| = |l|")
    if ell[0] > 1:
        raise UsageError("l must satisfy l_1 <= 1")
    return _tilde_A(k, ell)


@lru_cache(maxsize=None)
def _compositions(d, n):
    """All k in N^d with |k| = n."""
    if d == 1:
        return ((n,),)
    return tuple((i,) + rest for i in range(n, -1, -1) for rest in _compositions(d - 1, n - i))


def A_entry(ell, p):
    """``A_l(p)`` as a Fraction."""
    d = len(ell)
    n = sum(ell)
    total = Fraction(0)
    for k in _compositions(d, n):
        t = _tilde_A(k, tuple(ell))
        if t:
            total += Fraction(prod(pj**kj for pj, kj in zip(p, k)), prod(factorial(x) for x in k)) * t
    return total


def _scaled_entry(ell, p):
    """``|l|! * A_l(p)``; always an integer."""
    v = A_entry(ell, p) * factorial(sum(ell))
    if v.denominator != 1:
        raise AssertionError("scaled constraint entry is not integral")
    return v.numerator


def reduced_indices(d, M):
    """``Pi_M``: multi-indices with ``l_1 <= 1`` and ``|l| <= M`` (empty for ``M < 0``)."""
    out = []
    for n in range(M + 1):
        out.extend(k for k in _compositions(d, n) if k[0] <= 1)
    return out


def stencil_offsets(d, exclude_corners=False):
    """Compact stencil ``{-1,0,1}^d``; optionally without offsets having all coordinates nonzero."""
    S = list(product((-1, 0, 1), repeat=d))
    if exclude_corners:
        S = [p for p in S if not all(p)]
    return S


def constraint_matrix(d, M, offsets):
    """Integer constraint matrix with rows ``l in Pi_{M+1}`` and columns ``p in offsets``."""
    return [[_scaled_entry(ell, p) for p in offsets] for ell in reduced_indices(d, M + 1)]


def integer_rank(rows):
    """Rank of an integer matrix by Bareiss fraction-free elimination."""
    m = [list(r) for r in rows]
    if not m:
        return 0
    n_rows, n_cols = len(m), len(m[0])
    rank = 0
    prev = 1
    for col in range(n_cols):
        pivot = next((r for r in range(rank, n_rows) if m[r][col] != 0), None)
        if pivot is None:
            continue
        m[rank], m[pivot] = m[pivot], m[rank]
        pv = m[rank][col]
        for r in range(rank + 1, n_rows):
            rc = m[r][col]
            row_r, row_p = m[r], m[rank]
            for c in range(col, n_cols):
                # exact division is guaranteed by Sylvester's identity
                row_r[c] = (pv * row_r[c] - rc * row_p[c]) // prev
        prev = pv
        rank += 1
        if rank == n_rows:
            break
    return rank


def constraint_nullity(d, M, exclude_corners=False, offsets=None):
    """``K_M`` for the compact stencil in ``d`` dimensions."""
    if d < 1:
        raise UsageError("d must be positive")
    if M < -1:
        raise UsageError("M must be >= -1")
    S = stencil_offsets(d, exclude_corners) if offsets is None else list(offsets)
    return len(S) - integer_rank(constraint_matrix(d, M, S))


def nullity_table(d, max_m, exclude_corners=False):
    """``[(M, K_M) for M in -1..max_m]``."""
    return [(M, constraint_nullity(d, M, exclude_corners)) for M in range(-1, max_m + 1)]


def closed_form_check_2d(k, p):
    """``(A_(0,k)(p), A_(1,k-1)(p))`` from the power ``(i p_1 + p_2)^k / k!`` in Gaussian integers."""
    if k < 1:
        raise UsageError("k must be >= 1")
    re, im = 1, 0
    b_re, b_im = int(p[1]), int(p[0])
    for _ in range(k):
        re, im = re * b_re - im * b_im, re * b_im + im * b_re
    f = factorial(k)
    return Fraction(re, f), Fraction(im, f)


def removable_points(d, M, offsets):
    """Offsets whose removal keeps ``K_M > 0`` (single removals; nullity is monotone)."""
    offsets = list(offsets)
    out = []
    for i, p in enumerate(offsets):
        if not any(p):
            continue
        rest = offsets[:i] + offsets[i + 1 :]
        if constraint_nullity(d, M, offsets=rest) > 0:
            out.append(p)
    return out
