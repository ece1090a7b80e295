"""Crystal lattices as integer-voltage graphs, periodic realizations, and windows.

The infinite periodic graph is represented as the derived graph of a voltage
assignment: vertices are (base vertex, translation index in Z^d) and the copy
of half-edge e at index z runs to (terminus(e), z + voltage(e)).  Finite
computation happens on box windows of translation indices.
"""
from __future__ import annotations

import hashlib
import itertools
import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .graph_core import (
    FiniteGraph,
    GraphError,
    graph_from_edges,
    graph_from_lines,
    graph_to_lines,
    spanning_tree,
    tree_potentials,
)


class LatticeError(ValueError):
    """Invalid crystal lattice or realization data."""


class WindowLimitError(RuntimeError):
    """Requested window exceeds the configured memory guard."""


Vertex = tuple[int, tuple[int, ...]]


class CrystalLattice:
    """A finite base graph with integer voltage vectors on its half-edges.

    Voltages are antisymmetric under inversion.  The derived infinite graph
    must be connected; this is checked exactly via the subgroup generated by
    the fundamental-cycle voltages.
    """

    def __init__(self, base: FiniteGraph, dim: int,
                 voltage: Mapping[int, tuple[int, ...]], check: bool = True):
        if dim < 1:
            raise LatticeError("lattice dimension must be positive")
        self.base = base
        self.dim = dim
        self.voltage: dict[int, tuple[int, ...]] = {
            eid: tuple(int(c) for c in voltage[eid]) for eid in base.half_edges
        }
        if check:
            self._validate()

    def _validate(self) -> None:
        for eid, e in self.base.half_edges.items():
            vec = self.voltage.get(eid)
            if vec is None or len(vec) != self.dim:
                raise LatticeError(f"half-edge {eid} lacks a voltage vector of length {self.dim}")
            inv = self.voltage[e.inverse]
            if tuple(-c for c in vec) != inv:
                raise LatticeError(f"voltage of half-edge {eid} is not antisymmetric")
        if not self.base.is_connected():
            raise LatticeError("base graph must be connected")
        if not self._derived_connected():
            raise LatticeError("derived periodic graph is disconnected"
                               " (cycle voltages do not generate the full translation group)")

    def _derived_connected(self) -> bool:
        # Connected iff the voltages of the fundamental cycles generate Z^d.
        tree = spanning_tree(self.base)
        pot = tree_potentials(self.base, self.voltage, tree)
        cycles = []
        for eid, e in self.base.half_edges.items():
            if self.base.orbit_of(eid) in tree or eid != self.base.orbit_of(eid):
                continue
            vec = tuple(p + v - q for p, v, q in
                        zip(pot[e.origin], self.voltage[eid], pot[e.terminus]))
            cycles.append(vec)
        if not cycles:
            return self.dim == 0
        from .quotient import invariant_factors  # local import: quotient depends on lattice

        cols = [list(c) for c in zip(*cycles)]  # dim x ncycles
        factors = invariant_factors(cols)
        return len(factors) == self.dim and all(f == 1 for f in factors)

    def orbit_voltages(self) -> dict[int, tuple[int, ...]]:
        """Voltage per undirected orbit, on the canonical representative."""
        return {o: self.voltage[o] for o in self.base.edge_orbits()}

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, CrystalLattice)
            and self.base == other.base
            and self.dim == other.dim
            and self.voltage == other.voltage
        )

    def __repr__(self) -> str:
        return (f"CrystalLattice(dim={self.dim}, base vertices={len(self.base.vertices)},"
                f" orbits={len(self.base.edge_orbits())})")


class Realization:
    """Base-vertex positions plus an invertible period matrix.

    The realized point of (u, z) is positions[u] + period @ z, so translation
    by sigma in Z^d acts as addition of period @ sigma.
    """

    def __init__(self, positions: Mapping[int, Sequence[float]], period: Sequence[Sequence[float]]):
        self.positions: dict[int, tuple[float, ...]] = {
            u: tuple(float(c) for c in p) for u, p in sorted(positions.items())
        }
        self.period: tuple[tuple[float, ...], ...] = tuple(
            tuple(float(c) for c in row) for row in period
        )
        d = len(self.period)
        if any(len(row) != d for row in self.period):
            raise LatticeError("period matrix must be square")
        if any(len(p) != d for p in self.positions.values()):
            raise LatticeError("positions must match the period dimension")
        if abs(np.linalg.det(self.period_matrix())) < 1e-12:
            raise LatticeError("period matrix is singular")

    def period_matrix(self) -> np.ndarray:
        return np.array(self.period, dtype=float)

    def position_array(self, vertices: Sequence[int]) -> np.ndarray:
        return np.array([self.positions[u] for u in vertices], dtype=float)

    def point_of(self, u: int, z: Sequence[int]) -> np.ndarray:
        return np.array(self.positions[u]) + self.period_matrix() @ np.array(z, dtype=float)

    def translated(self, b: Sequence[float]) -> "Realization":
        off = tuple(float(c) for c in b)
        return Realization({u: tuple(a + o for a, o in zip(p, off))
                            for u, p in self.positions.items()}, self.period)

    def transformed(self, a_matrix: Sequence[Sequence[float]]) -> "Realization":
        A = np.array(a_matrix, dtype=float)
        return Realization({u: tuple(A @ np.array(p)) for u, p in self.positions.items()},
                           tuple(map(tuple, A @ self.period_matrix())))

    def __eq__(self, other) -> bool:
        return (isinstance(other, Realization)
                and self.positions == other.positions and self.period == other.period)


class Window:
    """Finite truncation of the lattice over translation indices in [-R, R]^d.

    Vertices are ordered by (index, base vertex); undirected edge orbits are
    keyed by (canonical half-edge id, origin index) and ordered likewise.
    Immutable after construction.
    """

    def __init__(self, lattice: CrystalLattice, realization: Realization, radius: int,
                 max_vertices: int = 400_000):
        if radius < 0:
            raise LatticeError("window radius must be nonnegative")
        d = lattice.dim
        base = lattice.base
        n_expected = len(base.vertices) * (2 * radius + 1) ** d
        if n_expected > max_vertices:
            raise WindowLimitError(
                f"window would hold {n_expected} vertices, above the cap {max_vertices}")
        self.lattice = lattice
        self.realization = realization
        self.radius = radius
        self.indices: tuple[tuple[int, ...], ...] = tuple(
            itertools.product(range(-radius, radius + 1), repeat=d))
        self.vertices: tuple[Vertex, ...] = tuple(
            (u, z) for z in self.indices for u in base.vertices)
        self.vertex_index: dict[Vertex, int] = {v: i for i, v in enumerate(self.vertices)}

        pos = realization.position_array(base.vertices)
        zmat = np.array(self.indices, dtype=float) @ realization.period_matrix().T
        nb = len(base.vertices)
        self.coords = (np.repeat(zmat, nb, axis=0)
                       + np.tile(pos, (len(self.indices), 1)))

        orbit_keys: list[tuple[int, tuple[int, ...]]] = []
        directed = 0
        for (u, z) in self.vertices:
            for eid in base.out_edges(u):
                e = base.half_edges[eid]
                z2 = tuple(a + b for a, b in zip(z, lattice.voltage[eid]))
                if not self._inside(z2):
                    continue
                directed += 1
                if eid <= e.inverse:
                    orbit_keys.append((eid, z))
        orbit_keys.sort()
        if 2 * len(orbit_keys) != directed:
            raise LatticeError("edge orbit count does not halve the directed instance count")
        self.orbit_keys: tuple[tuple[int, tuple[int, ...]], ...] = tuple(orbit_keys)
        self.orbit_index: dict[tuple[int, tuple[int, ...]], int] = {
            k: i for i, k in enumerate(orbit_keys)}

        adj: list[list[tuple[int, int]]] = [[] for _ in self.vertices]
        for oi, (eid, z) in enumerate(orbit_keys):
            e = base.half_edges[eid]
            z2 = tuple(a + b for a, b in zip(z, lattice.voltage[eid]))
            a = self.vertex_index[(e.origin, z)]
            b = self.vertex_index[(e.terminus, z2)]
            adj[a].append((b, oi))
            if b != a:
                adj[b].append((a, oi))
        self.adjacency: tuple[tuple[tuple[int, int], ...], ...] = tuple(
            tuple(sorted(row)) for row in adj)

    def _inside(self, z: Sequence[int]) -> bool:
        r = self.radius
        return all(-r <= c <= r for c in z)

    def contains(self, u: int, z: Sequence[int]) -> bool:
        return self.lattice.base.has_vertex(u) and self._inside(tuple(z))

    def orbit_endpoints(self, key: tuple[int, tuple[int, ...]]) -> tuple[Vertex, Vertex]:
        eid, z = key
        e = self.lattice.base.half_edges[eid]
        z2 = tuple(a + b for a, b in zip(z, self.lattice.voltage[eid]))
        return (e.origin, z), (e.terminus, z2)

    def interior_mask(self, margin: int) -> np.ndarray:
        """True for vertices at least `margin` layers away from the boundary."""
        bound = self.radius - margin
        mask = np.empty(len(self.vertices), dtype=bool)
        for i, (_, z) in enumerate(self.vertices):
            mask[i] = all(-bound <= c <= bound for c in z)
        return mask

    def min_edge_length(self) -> float:
        best = math.inf
        for key in self.orbit_keys:
            a, b = self.orbit_endpoints(key)
            d = float(np.linalg.norm(self.coords[self.vertex_index[a]]
                                     - self.coords[self.vertex_index[b]]))
            if 1e-15 < d < best:
                best = d
        return best

    def __repr__(self) -> str:
        return (f"Window(R={self.radius}, {len(self.vertices)} vertices,"
                f" {len(self.orbit_keys)} edge orbits)")


def instantiate_window(lattice: CrystalLattice, realization: Realization, radius: int,
                       max_vertices: int = 400_000) -> Window:
    """Materialize the [-R, R]^d window with cached coordinates."""
    return Window(lattice, realization, radius, max_vertices=max_vertices)


def closest_vertex(point: Sequence[float], window: Window) -> Vertex:
    """Euclidean-nearest realized window vertex.

    Ties are broken by the lexicographically smallest (index, base vertex).
    """
    if not window.vertices:
        raise LatticeError("window is empty")
    p = np.asarray(point, dtype=float)
    d2 = np.sum((window.coords - p) ** 2, axis=1)
    best = float(d2.min())
    tol = 1e-12 * max(1.0, best)
    cand = np.nonzero(d2 <= best + tol)[0]
    return min((window.vertices[i] for i in cand), key=lambda v: (v[1], v[0]))


# ---------------------------------------------------------------------------
# presets


def build_cubic(d: int) -> tuple[CrystalLattice, Realization]:
    if d < 1:
        raise LatticeError("cubic lattice needs dimension >= 1")
    base = graph_from_edges(1, [(0, 0)] * d)
    voltage = {}
    for i in range(d):
        vec = tuple(1 if j == i else 0 for j in range(d))
        voltage[2 * i] = vec
        voltage[2 * i + 1] = tuple(-c for c in vec)
    lat = CrystalLattice(base, d, voltage)
    eye = tuple(tuple(1.0 if i == j else 0.0 for j in range(d)) for i in range(d))
    return lat, Realization({0: (0.0,) * d}, eye)


def build_triangular() -> tuple[CrystalLattice, Realization]:
    base = graph_from_edges(1, [(0, 0), (0, 0), (0, 0)])
    vecs = [(1, 0), (0, 1), (1, 1)]
    voltage = {}
    for i, vec in enumerate(vecs):
        voltage[2 * i] = vec
        voltage[2 * i + 1] = tuple(-c for c in vec)
    lat = CrystalLattice(base, 2, voltage)
    s3 = math.sqrt(3.0)
    period = ((1.0, -0.5), (0.0, s3 / 2.0))  # columns: (1,0) and (-1/2, sqrt3/2)
    return lat, Realization({0: (0.0, 0.0)}, period)


def build_honeycomb() -> tuple[CrystalLattice, Realization]:
    base = graph_from_edges(2, [(0, 1), (0, 1), (0, 1)])
    vecs = [(0, 0), (-1, 0), (0, -1)]
    voltage = {}
    for i, vec in enumerate(vecs):
        voltage[2 * i] = vec
        voltage[2 * i + 1] = tuple(-c for c in vec)
    lat = CrystalLattice(base, 2, voltage)
    s3 = math.sqrt(3.0)
    period = ((1.5, 1.5), (s3 / 2.0, -s3 / 2.0))  # columns at +-30 degrees
    return lat, Realization({0: (0.0, 0.0), 1: (1.0, 0.0)}, period)


def build_diamond() -> tuple[CrystalLattice, Realization]:
    base = graph_from_edges(2, [(0, 1)] * 4)
    vecs = [(0, 0, 0), (-1, 0, 0), (0, -1, 0), (0, 0, -1)]
    voltage = {}
    for i, vec in enumerate(vecs):
        voltage[2 * i] = vec
        voltage[2 * i + 1] = tuple(-c for c in vec)
    lat = CrystalLattice(base, 3, voltage)
    period = ((0.0, 2.0, 2.0), (2.0, 0.0, 2.0), (2.0, 2.0, 0.0))  # fcc columns
    return lat, Realization({0: (0.0, 0.0, 0.0), 1: (1.0, 1.0, 1.0)}, period)


def build_preset(name: str) -> tuple[CrystalLattice, Realization]:
    """Named lattice: cubic<d> (e.g. cubic2), triangular, honeycomb, diamond."""
    key = name.strip().lower().replace("(", "").replace(")", "").replace(":", "")
    if key.startswith("cubic"):
        suffix = key[len("cubic"):]
        if not suffix.isdigit():
            raise LatticeError(f"cubic preset needs a dimension, e.g. cubic2: got {name!r}")
        return build_cubic(int(suffix))
    builders = {
        "triangular": build_triangular,
        "honeycomb": build_honeycomb,
        "diamond": build_diamond,
    }
    if key not in builders:
        raise LatticeError(f"unknown preset {name!r}")
    return builders[key]()


def build_custom(base: FiniteGraph, voltage: Mapping[int, tuple[int, ...]],
                 positions: Mapping[int, Sequence[float]],
                 period: Sequence[Sequence[float]],
                 probe_radius: int = 2,
                 degeneracy_tol: float = 1e-9) -> tuple[CrystalLattice, Realization]:
    """Validated lattice + realization from raw parts.

    Checks voltage antisymmetry, connectivity of the derived graph, a
    nonsingular period, and nondegeneracy (injectivity) on a probe window.
    """
    dim = len(period)
    lat = CrystalLattice(base, dim, voltage)
    real = Realization(positions, period)
    win = instantiate_window(lat, real, probe_radius)
    order = np.lexsort(win.coords.T[::-1])
    pts = win.coords[order]
    gaps = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    if len(pts) > 1 and float(gaps.min()) < degeneracy_tol:
        raise LatticeError("realization is degenerate: two vertices realize the same point")
    return lat, real


# ---------------------------------------------------------------------------
# edge connectivity (window max-flow with a Menger certificate)


@dataclass(frozen=True)
class EdgeConnectivity:
    value: int
    source: Vertex
    sink: Vertex
    paths: tuple[tuple[Vertex, ...], ...]
    radius: int


def _max_flow_unit(n: int, arcs: list[tuple[int, int, int]], s: int, t: int):
    """Edmonds-Karp on an arc list (u, v, capacity); returns (value, flow dict)."""
    cap: dict[tuple[int, int], int] = {}
    nbr: list[set[int]] = [set() for _ in range(n)]
    for u, v, c in arcs:
        cap[(u, v)] = cap.get((u, v), 0) + c
        cap.setdefault((v, u), 0)
        nbr[u].add(v)
        nbr[v].add(u)
    flow = {k: 0 for k in cap}
    value = 0
    while True:
        parent = {s: s}
        queue = deque([s])
        while queue and t not in parent:
            u = queue.popleft()
            for v in nbr[u]:
                if v not in parent and cap[(u, v)] - flow[(u, v)] > 0:
                    parent[v] = u
                    queue.append(v)
        if t not in parent:
            return value, flow
        path = [t]
        while path[-1] != s:
            path.append(parent[path[-1]])
        path.reverse()
        push = min(cap[(u, v)] - flow[(u, v)] for u, v in zip(path, path[1:]))
        for u, v in zip(path, path[1:]):
            flow[(u, v)] += push
            flow[(v, u)] -= push
        value += push


def _disjoint_paths(n: int, flow: dict, s: int, t: int, k: int) -> list[list[int]]:
    """Decompose an integral flow of value k into k edge-disjoint s-t paths."""
    out: dict[int, dict[int, int]] = {}
    for (u, v), f in flow.items():
        if f > 0:
            out.setdefault(u, {})[v] = f
    paths = []
    for _ in range(k):
        path = [s]
        guard = 0
        while path[-1] != t:
            u = path[-1]
            step = min(v for v, f in out[u].items() if f > 0)
            out[u][step] -= 1
            path.append(step)
            guard += 1
            if guard > 10 * n * n:
                raise RuntimeError("flow decomposition failed to terminate")
        paths.append(path)
    return paths


def edge_connectivity_estimate(lattice: CrystalLattice, realization: Realization,
                               radius: int = 3, margin: int = 1,
                               max_vertices: int = 400_000) -> EdgeConnectivity:
    """Window estimate of the edge connectivity of the infinite graph.

    Minimum over interior vertex pairs of unit-capacity max-flow; edges that
    touch the boundary margin get effectively infinite capacity so boundary
    cuts never count.  The returned Menger certificate (that many
    edge-disjoint paths) makes the value a rigorous lower bound.
    """
    if radius < 2:
        raise LatticeError("edge connectivity needs radius >= 2")
    win = instantiate_window(lattice, realization, radius, max_vertices=max_vertices)
    interior = win.interior_mask(margin)
    interior_ids = [i for i in range(len(win.vertices)) if interior[i]]
    if len(interior_ids) < 2:
        raise LatticeError("window too small: no interior vertex pair")
    big = len(win.orbit_keys) + 1
    arcs = []
    for key in win.orbit_keys:
        a, b = win.orbit_endpoints(key)
        ia, ib = win.vertex_index[a], win.vertex_index[b]
        if ia == ib:
            continue
        c = 1 if (interior[ia] and interior[ib]) else big
        arcs.append((ia, ib, c))
        arcs.append((ib, ia, c))
    s = interior_ids[0]
    best = None
    for t in interior_ids[1:]:
        value, flow = _max_flow_unit(len(win.vertices), arcs, s, t)
        if best is None or value < best[0]:
            best = (value, t, flow)
    value, t, flow = best
    paths = _disjoint_paths(len(win.vertices), flow, s, t, value)
    cert = tuple(tuple(win.vertices[i] for i in p) for p in paths)
    return EdgeConnectivity(value, win.vertices[s], win.vertices[t], cert, radius)


# ---------------------------------------------------------------------------
# symmetry probing


def check_symmetry(lattice: CrystalLattice, realization: Realization,
                   candidate: tuple[Sequence[float], Sequence[Sequence[float]]],
                   radius: int = 3, tol: float = 1e-8, margin: int = 1) -> bool:
    """Does x -> A x + b map the realized lattice into itself?

    Interior window vertices are mapped and matched back to abstract vertices
    by inverting the realization; adjacency must be preserved exactly (same
    base edge data up to translation).  A must be orthogonal within tol.
    """
    b, A = candidate
    b = np.asarray(b, dtype=float)
    A = np.asarray(A, dtype=float)
    if not np.allclose(A.T @ A, np.eye(lattice.dim), atol=max(tol, 1e-9)):
        return False
    win = instantiate_window(lattice, realization, radius)
    interior = win.interior_mask(margin)
    rho_inv = np.linalg.inv(realization.period_matrix())
    pos = {u: np.array(p) for u, p in realization.positions.items()}

    def identify(point: np.ndarray) -> Vertex | None:
        for u in lattice.base.vertices:
            y = rho_inv @ (point - pos[u])
            z = np.rint(y)
            if np.max(np.abs(y - z)) <= tol:
                return (u, tuple(int(c) for c in z))
        return None

    image: dict[int, Vertex] = {}
    for i, v in enumerate(win.vertices):
        if not interior[i]:
            continue
        target = identify(A @ win.coords[i] + b)
        if target is None:
            return False
        image[i] = target

    base = lattice.base
    by_pair: dict[tuple[int, int], set[tuple[int, ...]]] = {}
    for eid, e in base.half_edges.items():
        by_pair.setdefault((e.origin, e.terminus), set()).add(lattice.voltage[eid])
    for key in win.orbit_keys:
        va, vb = win.orbit_endpoints(key)
        ia, ib = win.vertex_index[va], win.vertex_index[vb]
        if ia not in image or ib not in image:
            continue
        (ua, za), (ub, zb) = image[ia], image[ib]
        dz = tuple(p - q for p, q in zip(zb, za))
        if dz not in by_pair.get((ua, ub), set()):
            return False
    return True


# ---------------------------------------------------------------------------
# serialization

FORMAT_HEADER = "crystal-lattice 1"


def lattice_to_text(lattice: CrystalLattice, realization: Realization) -> str:
    """Stable text form: header, dim, graph with voltages, positions, period rows."""
    lines = [FORMAT_HEADER, f"dim {lattice.dim}"]
    lines += graph_to_lines(lattice.base, lattice.voltage)
    for u in lattice.base.vertices:
        coords = " ".join(repr(c) for c in realization.positions[u])
        lines.append(f"position {u} {coords}")
    for row in realization.period:
        lines.append("period " + " ".join(repr(c) for c in row))
    return "\n".join(lines) + "\n"


def lattice_from_text(text: str) -> tuple[CrystalLattice, Realization]:
    lines = [s for s in text.splitlines() if s.strip() and not s.strip().startswith("#")]
    if not lines or lines[0].strip() != FORMAT_HEADER:
        raise LatticeError(f"missing format header {FORMAT_HEADER!r}")
    if not lines[1].startswith("dim "):
        raise LatticeError("missing dim record")
    dim = int(lines[1].split()[1])
    graph, voltage, rest = graph_from_lines(lines[2:], dim=dim)
    if voltage is None:
        raise LatticeError("lattice file lacks voltage vectors")
    positions: dict[int, tuple[float, ...]] = {}
    period_rows: list[tuple[float, ...]] = []
    for raw in rest:
        tok = raw.split()
        if tok[0] == "position":
            positions[int(tok[1])] = tuple(float(x) for x in tok[2:])
        elif tok[0] == "period":
            period_rows.append(tuple(float(x) for x in tok[1:]))
        else:
            raise LatticeError(f"unexpected record {raw!r}")
    if len(period_rows) != dim:
        raise LatticeError("period matrix row count does not match dim")
    return CrystalLattice(graph, dim, voltage), Realization(positions, period_rows)


def lattice_hash(lattice: CrystalLattice, realization: Realization) -> str:
    """sha256 of the canonical text form; embedded in reports for provenance."""
    return hashlib.sha256(lattice_to_text(lattice, realization).encode()).hexdigest()
