"""Rational projections and quotient lattices.

The user specifies an integer kernel sublattice; the induced epimorphism q on
translation indices comes from an exact Smith normal form, and the orthogonal
projection P is derived from the realization.  The commuting square
P(point(x)) = point1(project(x)) is the correctness contract, checked by
verify_diagram.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .lattice import CrystalLattice, LatticeError, Realization, Window, instantiate_window

Matrix = list[list[int]]


class TorsionError(LatticeError):
    """Kernel sublattice has a torsion quotient; not a rational-projection kernel."""

    def __init__(self, factors: tuple[int, ...]):
        self.factors = factors
        super().__init__(
            f"quotient of Z^d by the kernel has torsion: invariant factors {factors}")


class RankError(LatticeError):
    """Kernel basis columns are linearly dependent."""


# ---------------------------------------------------------------------------
# Smith normal form, exact over Python integers


def _eye(n: int) -> Matrix:
    return [[1 if i == j else 0 for j in range(n)] for i in range(n)]


def _matmul(a: Matrix, b: Matrix) -> Matrix:
    return [[sum(x * y for x, y in zip(row, col)) for col in zip(*b)] for row in a]


def smith_normal_form(m: Sequence[Sequence[int]]) -> tuple[Matrix, Matrix, Matrix]:
    """Exact Smith normal form: returns (U, D, V) with U @ m @ V == D.

    U and V are unimodular, D is diagonal with each entry dividing the next.
    All arithmetic is arbitrary-precision Python int, so there is no overflow.
    """
    d = [[int(x) for x in row] for row in m]
    rows = len(d)
    cols = len(d[0]) if rows else 0
    for row in d:
        if len(row) != cols:
            raise ValueError("ragged matrix")
    u = _eye(rows)
    v = _eye(cols)

    def swap_rows(i, j):
        if i != j:
            d[i], d[j] = d[j], d[i]
            u[i], u[j] = u[j], u[i]

    def swap_cols(i, j):
        if i != j:
            for row in d:
                row[i], row[j] = row[j], row[i]
            for row in v:
                row[i], row[j] = row[j], row[i]

    def add_row(dst, src, c):
        d[dst] = [a + c * b for a, b in zip(d[dst], d[src])]
        u[dst] = [a + c * b for a, b in zip(u[dst], u[src])]

    def add_col(dst, src, c):
        for row in d:
            row[dst] += c * row[src]
        for row in v:
            row[dst] += c * row[src]

    def negate_row(i):
        d[i] = [-a for a in d[i]]
        u[i] = [-a for a in u[i]]

    for s in range(min(rows, cols)):
        while True:
            pivot = None
            for i in range(s, rows):
                for j in range(s, cols):
                    if d[i][j] != 0 and (pivot is None or abs(d[i][j]) < abs(d[pivot[0]][pivot[1]])):
                        pivot = (i, j)
            if pivot is None:
                break
            swap_rows(s, pivot[0])
            swap_cols(s, pivot[1])
            if d[s][s] < 0:
                negate_row(s)
            clean = True
            for i in range(s + 1, rows):
                q = d[i][s] // d[s][s]
                if q:
                    add_row(i, s, -q)
                if d[i][s]:
                    clean = False
            for j in range(s + 1, cols):
                q = d[s][j] // d[s][s]
                if q:
                    add_col(j, s, -q)
                if d[s][j]:
                    clean = False
            if not clean:
                continue
            # cross is zero; enforce divisibility of the remaining block
            offender = None
            for i in range(s + 1, rows):
                for j in range(s + 1, cols):
                    if d[i][j] % d[s][s]:
                        offender = i
                        break
                if offender is not None:
                    break
            if offender is None:
                break
            add_row(s, offender, 1)
    return u, d, v


def invariant_factors(m: Sequence[Sequence[int]]) -> tuple[int, ...]:
    """Nonzero diagonal of the Smith normal form."""
    _, d, _ = smith_normal_form(m)
    out = []
    for i in range(min(len(d), len(d[0]) if d else 0)):
        if d[i][i]:
            out.append(d[i][i])
    return tuple(out)


def _unimodular_inverse(m: Matrix) -> Matrix:
    """Exact inverse of an integer matrix with determinant +-1."""
    n = len(m)
    a = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)]
         for i, row in enumerate(m)]
    for col in range(n):
        piv = next(r for r in range(col, n) if a[r][col] != 0)
        a[col], a[piv] = a[piv], a[col]
        inv = 1 / a[col][col]
        a[col] = [x * inv for x in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    out = [[x for x in row[n:]] for row in a]
    for row in out:
        for x in row:
            if x.denominator != 1:
                raise ValueError("matrix is not unimodular")
    return [[int(x) for x in row] for row in out]


# ---------------------------------------------------------------------------
# kernel sublattices and quotient construction


@dataclass(frozen=True)
class KernelSublattice:
    """Integer columns spanning the sublattice of translations to collapse.

    The quotient Z^d / span(columns) must be torsion-free (all invariant
    factors 1), which is exactly the rational-projection condition.
    """

    columns: tuple[tuple[int, ...], ...]
    dim: int

    @staticmethod
    def of(columns: Sequence[Sequence[int]], dim: int) -> "KernelSublattice":
        cols = tuple(tuple(int(c) for c in col) for col in columns)
        for col in cols:
            if len(col) != dim:
                raise LatticeError(f"kernel column {col} does not have dimension {dim}")
        k = KernelSublattice(cols, dim)
        if cols:
            factors = invariant_factors(k.matrix())
            if len(factors) != len(cols):
                raise RankError("kernel columns are linearly dependent")
            if any(f != 1 for f in factors):
                raise TorsionError(factors)
        return k

    def matrix(self) -> Matrix:
        """d x r matrix with the kernel generators as columns."""
        if not self.columns:
            return [[] for _ in range(self.dim)]
        return [list(row) for row in zip(*self.columns)]

    @property
    def rank(self) -> int:
        return len(self.columns)


@dataclass
class QuotientData:
    """Everything derived from one rational projection.

    q maps translation indices of the cover onto those of the quotient;
    p_matrix expresses the orthogonal projection in an orthonormal basis of
    the image subspace, so the diagram P o point = point1 o project commutes.
    """

    lattice: CrystalLattice
    realization: Realization
    kernel: KernelSublattice
    q: tuple[tuple[int, ...], ...]            # d1 x d
    section: tuple[tuple[int, ...], ...]      # d x d1, right inverse of q
    p_matrix: np.ndarray                      # d1 x d, rows orthonormal
    sub_lattice: CrystalLattice
    sub_realization: Realization

    @property
    def dim_quotient(self) -> int:
        return len(self.q)

    def project_index(self, z: Sequence[int]) -> tuple[int, ...]:
        return tuple(sum(r * c for r, c in zip(row, z)) for row in self.q)

    def project_vertex(self, vertex) -> tuple[int, tuple[int, ...]]:
        u, z = vertex
        return (u, self.project_index(z))


def _gram_schmidt(columns: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    basis = []
    for j in range(columns.shape[1]):
        w = columns[:, j].astype(float)
        for b in basis:
            w = w - (b @ w) * b
        norm = float(np.linalg.norm(w))
        if norm > tol:
            basis.append(w / norm)
    return np.array(basis)


def build_quotient(lattice: CrystalLattice, realization: Realization,
                   kernel: KernelSublattice) -> QuotientData:
    """Quotient lattice, its realization, and the projection data.

    The translation epimorphism is read off the Smith normal form of the
    kernel: with U K V = D = [I; 0], the last d1 rows of U give q and the last
    d1 columns of U^-1 a section.  The projection kills the realized kernel
    subspace and writes the complement in an orthonormal basis obtained by
    Gram-Schmidt on the realized section.
    """
    d = lattice.dim
    if kernel.dim != d:
        raise LatticeError(f"kernel dimension {kernel.dim} does not match lattice dim {d}")
    r = kernel.rank
    d1 = d - r
    if d1 < 1:
        raise LatticeError("kernel rank must leave at least one quotient dimension")

    if r:
        u_mat, diag, _ = smith_normal_form(kernel.matrix())
        factors = tuple(diag[i][i] for i in range(r) if diag[i][i])
        if len(factors) != r:
            raise RankError("kernel columns are linearly dependent")
        if any(f != 1 for f in factors):
            raise TorsionError(factors)
    else:
        u_mat = _eye(d)
    u_inv = _unimodular_inverse(u_mat)
    q = tuple(tuple(row) for row in u_mat[r:])
    section = tuple(tuple(u_inv[i][r + j] for j in range(d1)) for i in range(d))

    rho = realization.period_matrix()
    kernel_real = rho @ np.array(kernel.matrix(), dtype=float).reshape(d, r)
    section_real = rho @ np.array(section, dtype=float)
    span = _gram_schmidt(kernel_real) if r else np.zeros((0, d))
    if span.shape[0] != r:
        raise RankError("realized kernel subspace is rank deficient")
    complement = section_real.copy()
    for b in span:
        complement -= np.outer(b, b @ complement)
    p_matrix = _gram_schmidt(complement)
    if p_matrix.shape[0] != d1:
        raise RankError("projection image is rank deficient")

    q_arr = np.array(q, dtype=int)
    voltage1 = {eid: tuple(int(c) for c in q_arr @ np.array(vec))
                for eid, vec in lattice.voltage.items()}
    sub_lattice = CrystalLattice(lattice.base, d1, voltage1)
    period1 = p_matrix @ section_real
    positions1 = {u: tuple(float(c) for c in p_matrix @ np.array(p))
                  for u, p in realization.positions.items()}
    sub_realization = Realization(positions1, tuple(map(tuple, period1)))
    return QuotientData(lattice, realization, kernel, q, section, p_matrix,
                        sub_lattice, sub_realization)


def covering_fiber(qdata: QuotientData, quotient_vertex: tuple[int, tuple[int, ...]],
                   window: Window, quotient_window: Window | None = None) -> list:
    """All window vertices of the cover mapping onto the given quotient vertex.

    The fiber is the set of (u, z) with the same base vertex whose index is
    congruent to the target modulo the kernel.
    """
    u1, z1 = quotient_vertex
    if not qdata.lattice.base.has_vertex(u1):
        raise LatticeError(f"unknown base vertex {u1}")
    if quotient_window is not None and not quotient_window.contains(u1, z1):
        raise LatticeError(f"quotient vertex {quotient_vertex} is outside the quotient window")
    target = tuple(int(c) for c in z1)
    out = [v for v in window.vertices
           if v[0] == u1 and qdata.project_index(v[1]) == target]
    return out


@dataclass(frozen=True)
class DiagramReport:
    max_deviation: float
    tolerance: float
    radius: int
    n_vertices: int

    @property
    def passed(self) -> bool:
        return self.max_deviation <= self.tolerance


def verify_diagram(qdata: QuotientData, radius: int = 3, tol: float = 1e-9) -> DiagramReport:
    """Max over window vertices of |P(point(x)) - point1(project(x))|."""
    win = instantiate_window(qdata.lattice, qdata.realization, radius)
    lhs = win.coords @ qdata.p_matrix.T
    rho1 = qdata.sub_realization.period_matrix()
    pos1 = {u: np.array(p) for u, p in qdata.sub_realization.positions.items()}
    rhs = np.empty_like(lhs)
    for i, (u, z) in enumerate(win.vertices):
        rhs[i] = pos1[u] + rho1 @ np.array(qdata.project_index(z), dtype=float)
    dev = float(np.max(np.linalg.norm(lhs - rhs, axis=1))) if len(win.vertices) else 0.0
    return DiagramReport(dev, tol, radius, len(win.vertices))
