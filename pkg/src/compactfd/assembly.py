"""Assemble the sparse SPD system on a uniform grid with Dirichlet boundary folding.

Unknowns are the interior nodes ``i in {1..N-1}^d`` ordered lexicographically
with the first axis fastest.  Each grid link (a pair of nodes ``x`` and
``x + q h``) gets one coefficient, evaluated once at the link midpoint and
written into both rows, so the matrix is symmetric bit for bit.  Links to
boundary nodes move to the right-hand side.  Every equation is multiplied by
the scheme's orientation sign so that the diagonal is positive.
"""

import os
import re
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.io
import scipy.sparse as sp

from .errors import DefinitenessError, UsageError
from .stencil1d import scheme_1d
from .stencil_nd import CHUNK, Scheme, get_scheme

__all__ = [
    "Grid",
    "SymmetricSparseSystem",
    "OneDScheme",
    "resolve_scheme",
    "assemble",
    "dirichlet_values",
    "write_matrix_market",
]


@dataclass(frozen=True)
class Grid:
    """Uniform grid with ``N`` subdivisions per axis on ``(l1, l2)^dim``."""

    dim: int
    N: int
    l1: float
    l2: float

    def __post_init__(self):
        if self.N < 2:
            raise UsageError("grid needs N >= 2")
        if not self.l1 < self.l2:
            raise UsageError("grid needs l1 < l2")
        if self.dim < 1:
            raise UsageError("grid needs dim >= 1")

    @classmethod
    def for_problem(cls, problem, N):
        return cls(problem.dim, int(N), problem.l1, problem.l2)

    @property
    def h(self):
        return (self.l2 - self.l1) / self.N

    @property
    def n(self):
        return (self.N - 1) ** self.dim

    @property
    def shape(self):
        return (self.N - 1,) * self.dim

    def node(self, index):
        return self.l1 + np.asarray(index, dtype=float) * self.h

    def interior_indices(self):
        """Integer indices of the interior nodes, shape ``(d, n)``, first axis fastest."""
        ticks = np.arange(1, self.N)
        mesh = np.meshgrid(*([ticks] * self.dim), indexing="ij")
        return np.stack([m.ravel(order="F") for m in mesh])

    def interior_nodes(self):
        return self.node(self.interior_indices())

    def all_nodes(self):
        ticks = np.arange(0, self.N + 1)
        mesh = np.meshgrid(*([ticks] * self.dim), indexing="ij")
        return self.node(np.stack([m.ravel(order="F") for m in mesh]))

    def flat_index(self, idx):
        """Row number of interior index arrays ``idx`` (shape ``(d, m)``); ``-1`` on the boundary."""
        idx = np.asarray(idx)
        inside = np.all((idx >= 1) & (idx <= self.N - 1), axis=0)
        stride = (self.N - 1) ** np.arange(self.dim)
        flat = ((idx - 1) * stride[:, np.newaxis]).sum(axis=0)
        return np.where(inside, flat, -1)

    def unflatten(self, values):
        """Reshape a length-``n`` vector to a ``(N-1,)*d`` array indexed ``[i1, ..., id]``."""
        return np.asarray(values).reshape(self.shape, order="F")


@dataclass
class SymmetricSparseSystem:
    """``matrix @ u = rhs`` for the interior unknowns of ``grid``."""

    matrix: sp.csr_matrix
    rhs: np.ndarray
    grid: Grid
    scheme: str
    meta: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.matrix.shape[0]

    def is_bitwise_symmetric(self):
        A = self.matrix.tocsr()
        B = A.T.tocsr()
        A.sort_indices()
        B.sort_indices()
        return (
            np.array_equal(A.indptr, B.indptr)
            and np.array_equal(A.indices, B.indices)
            and np.array_equal(A.data.view(np.uint64), B.data.view(np.uint64))
        )

    def write_matrix_market(self, path):
        write_matrix_market(self.matrix, path, comment=f"scheme {self.scheme}, N={self.grid.N}")


class OneDScheme:
    """Adapter presenting the order-``M`` 1D scheme to the assembler."""

    dim = 1
    sign = -1.0

    def __init__(self, M, e_source="recursion"):
        self.order = int(M)
        self.e_source = e_source
        self.name = f"1d-o{self.order}"


_ONE_D = re.compile(r"1d-o(\d+)$")


def resolve_scheme(scheme, dim=None):
    """Scheme object from a selector string or pass-through of an existing object."""
    if isinstance(scheme, (Scheme, OneDScheme)):
        if dim is not None and scheme.dim != dim:
            raise UsageError(f"scheme {scheme.name} is for d={scheme.dim}, problem has d={dim}")
        return scheme
    m = _ONE_D.match(str(scheme))
    if m:
        if dim not in (None, 1):
            raise UsageError(f"scheme {scheme} is for d=1, problem has d={dim}")
        M = int(m.group(1))
        if M < 2 or M % 2:
            raise UsageError(f"1D order must be even and >= 2, got {M}")
        return OneDScheme(M)
    return get_scheme(str(scheme), dim)


def dirichlet_values(p, grid=None):
    """Boundary evaluator ``g`` (``u_exact`` for manufactured problems) taking points ``(d, m)``."""

    def g(points):
        return np.asarray(p.g_value(np.asarray(points, dtype=float)), dtype=float) * np.ones(
            np.shape(points)[1:]
        )

    return g


def _link_starts(grid, q):
    """Start indices of all links of class ``q`` touching at least one interior node."""
    ranges = []
    for c in q:
        lo = 0 if c >= 0 else 1
        hi = grid.N - 1 if c > 0 else grid.N
        ranges.append(np.arange(lo, hi + 1))
    mesh = np.meshgrid(*ranges, indexing="ij")
    start = np.stack([m.ravel(order="F") for m in mesh])
    end = start + np.asarray(q)[:, np.newaxis]
    r0 = grid.flat_index(start)
    r1 = grid.flat_index(end)
    keep = (r0 >= 0) | (r1 >= 0)
    return start[:, keep], end[:, keep], r0[keep], r1[keep]


def _parallel_values(fn, points, threads):
    """Evaluate ``fn`` on fixed ``CHUNK``-sized slices; chunking never depends on ``threads``."""
    n = points.shape[1]
    slices = [slice(s, min(s + CHUNK, n)) for s in range(0, n, CHUNK)]
    if threads <= 1 or len(slices) <= 1:
        parts = [fn(points[:, s]) for s in slices]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda s: fn(points[:, s]), slices))
    return np.concatenate(parts) if parts else np.empty(0)


def _collect_links_nd(p, scheme, grid, threads):
    h = grid.h
    links = []
    for q in scheme.classes:
        start, end, r0, r1 = _link_starts(grid, q)
        mids = grid.node(start) + np.asarray(q, dtype=float)[:, np.newaxis] * (h / 2.0)
        C = _parallel_values(lambda pts, q=q: scheme.link_values(p, q, pts, h), mids, threads)
        links.append((start, end, r0, r1, C))
    nodes = grid.interior_nodes()
    fh = _parallel_values(lambda pts: scheme.rhs_values(p, pts, h), nodes, threads)
    return links, fh


def _collect_links_1d(p, scheme, grid):
    C, fh = scheme_1d(p, grid.N, scheme.order, scheme.e_source)
    start = np.arange(grid.N)[np.newaxis]
    end = start + 1
    return [(start, end, grid.flat_index(start), grid.flat_index(end), C)], fh


def assemble(p, scheme, grid, threads=1):
    """Build the SPD system for problem ``p`` with ``scheme`` on ``grid``."""
    scheme = resolve_scheme(scheme, p.dim)
    if grid.dim != p.dim:
        raise UsageError(f"grid is {grid.dim}D, problem is {p.dim}D")
    if (grid.l1, grid.l2) != (p.l1, p.l2):
        raise UsageError("grid and problem domains differ")
    if isinstance(scheme, OneDScheme):
        links, fh = _collect_links_1d(p, scheme, grid)
    else:
        scheme.check_problem(p, grid.all_nodes())
        links, fh = _collect_links_nd(p, scheme, grid, threads)
    g = dirichlet_values(p, grid)
    s = scheme.sign
    n = grid.n
    diag = np.zeros(n)
    rhs = s * fh
    rows, cols, vals = [], [], []
    for start, end, r0, r1, C in links:
        sc = s * C
        both = (r0 >= 0) & (r1 >= 0)
        rows += [r0[both], r1[both]]
        cols += [r1[both], r0[both]]
        vals += [sc[both], sc[both]]
        np.add.at(diag, r0[r0 >= 0], -sc[r0 >= 0])
        np.add.at(diag, r1[r1 >= 0], -sc[r1 >= 0])
        # one endpoint on the boundary: move C * g to the right-hand side
        for here, there_idx in ((r0, end), (r1, start)):
            sel = (here >= 0) & ~both
            if np.any(sel):
                gv = g(grid.node(there_idx[:, sel]))
                np.add.at(rhs, here[sel], -sc[sel] * gv)
    if not np.all(diag > 0):
        bad = int(np.flatnonzero(~(diag > 0))[0])
        raise DefinitenessError(f"assembled diagonal entry {bad} is {diag[bad]:.3e} (not positive)")
    rows.append(np.arange(n))
    cols.append(np.arange(n))
    vals.append(diag)
    A = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    ).tocsr()
    A.sort_indices()
    return SymmetricSparseSystem(
        matrix=A, rhs=rhs, grid=grid, scheme=scheme.name, meta={"sign": s, "problem": p.name}
    )


def write_matrix_market(matrix, path, comment=""):
    """Write ``matrix`` in Matrix Market coordinate format (general symmetry, full pattern), atomically."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".mm-", dir=directory)
    try:
        with os.fdopen(fd, "wb") as fh:
            scipy.io.mmwrite(fh, sp.coo_matrix(matrix), comment=comment, field="real", symmetry="general")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
