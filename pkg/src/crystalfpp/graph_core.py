"""Finite symmetric directed graphs with inversion pairing, and lifting machinery.

A graph is stored as a set of half-edges: every undirected edge appears as a
pair (e, inverse(e)) of directed half-edges.  Undirected views are derived as
orbits of the inversion involution.  All traversals order by ascending id so
every build is reproducible byte-for-byte.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence


class GraphError(ValueError):
    """Structural invariant of a graph was violated."""


class DisconnectedGraphError(GraphError):
    """Operation requires a connected graph."""


class OutOfWindowError(RuntimeError):
    """A lift left the instantiated window; the caller should enlarge it."""

    def __init__(self, vertex, message=None):
        self.vertex = vertex
        super().__init__(message or f"lift reached vertex {vertex} outside the window")


@dataclass(frozen=True)
class HalfEdge:
    """One directed half of an undirected edge."""

    id: int
    origin: int
    terminus: int
    inverse: int


class FiniteGraph:
    """Finite graph given by vertices and inversion-paired half-edges.

    Parallel edges and loops are permitted.  Invariants (involution without
    fixed points, incidence coherence) are checked on construction.
    """

    def __init__(self, vertices: Iterable[int], half_edges: Iterable[HalfEdge]):
        self.vertices: tuple[int, ...] = tuple(sorted(set(vertices)))
        edges = {}
        for e in half_edges:
            if e.id in edges:
                raise GraphError(f"duplicate half-edge id {e.id}")
            edges[e.id] = e
        self.half_edges: dict[int, HalfEdge] = dict(sorted(edges.items()))
        self._validate()
        vset = set(self.vertices)
        self._out: dict[int, tuple[int, ...]] = {v: () for v in vset}
        grouped: dict[int, list[int]] = {v: [] for v in vset}
        for eid, e in self.half_edges.items():
            grouped[e.origin].append(eid)
        for v, ids in grouped.items():
            self._out[v] = tuple(sorted(ids))

    def _validate(self) -> None:
        vset = set(self.vertices)
        for e in self.half_edges.values():
            if e.origin not in vset or e.terminus not in vset:
                raise GraphError(f"half-edge {e.id} references unknown vertex")
            if e.inverse not in self.half_edges:
                raise GraphError(f"half-edge {e.id} has missing inverse {e.inverse}")
            if e.inverse == e.id:
                raise GraphError(f"half-edge {e.id} is its own inverse")
            inv = self.half_edges[e.inverse]
            if inv.inverse != e.id:
                raise GraphError(f"inversion is not an involution at {e.id}")
            if inv.origin != e.terminus or inv.terminus != e.origin:
                raise GraphError(f"incidence of {e.id} does not match its inverse")

    def out_edges(self, v: int) -> tuple[int, ...]:
        """Ids of half-edges with origin v, ascending."""
        return self._out[v]

    def has_vertex(self, v: int) -> bool:
        return v in self._out

    def inverse(self, eid: int) -> int:
        return self.half_edges[eid].inverse

    def orbit_of(self, eid: int) -> int:
        """Canonical representative (smaller id) of the undirected orbit of eid."""
        return min(eid, self.half_edges[eid].inverse)

    def edge_orbits(self) -> tuple[int, ...]:
        """Canonical ids of the undirected edge orbits, ascending."""
        return tuple(sorted({self.orbit_of(e) for e in self.half_edges}))

    def is_connected(self) -> bool:
        if not self.vertices:
            return True
        seen = {self.vertices[0]}
        queue = deque(seen)
        while queue:
            v = queue.popleft()
            for eid in self._out[v]:
                w = self.half_edges[eid].terminus
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        return len(seen) == len(self.vertices)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, FiniteGraph)
            and self.vertices == other.vertices
            and self.half_edges == other.half_edges
        )

    def __repr__(self) -> str:
        return f"FiniteGraph({len(self.vertices)} vertices, {len(self.half_edges) // 2} edges)"


def graph_from_edges(n_vertices: int, edges: Sequence[tuple[int, int]]) -> FiniteGraph:
    """Build a graph from undirected (origin, terminus) pairs.

    Edge i gets half-edge ids 2i (as given) and 2i+1 (reversed).
    """
    half_edges = []
    for i, (u, v) in enumerate(edges):
        half_edges.append(HalfEdge(2 * i, u, v, 2 * i + 1))
        half_edges.append(HalfEdge(2 * i + 1, v, u, 2 * i))
    return FiniteGraph(range(n_vertices), half_edges)


@dataclass(frozen=True)
class PathSeq:
    """A path in a finite graph, as an ordered tuple of half-edge ids."""

    edges: tuple[int, ...]

    @staticmethod
    def of(graph: FiniteGraph, edges: Iterable[int]) -> "PathSeq":
        ids = tuple(edges)
        for a, b in zip(ids, ids[1:]):
            if graph.half_edges[a].terminus != graph.half_edges[b].origin:
                raise GraphError(f"half-edges {a} and {b} are not consecutive")
        return PathSeq(ids)

    def __len__(self) -> int:
        return len(self.edges)


@dataclass(frozen=True)
class LiftedPath:
    """A path in a lattice window: per-step (base half-edge id, origin index)."""

    steps: tuple[tuple[int, tuple[int, ...]], ...]
    vertices: tuple[tuple[int, tuple[int, ...]], ...]  # len(steps) + 1

    def base_edges(self) -> tuple[int, ...]:
        return tuple(e for e, _ in self.steps)

    @property
    def start(self):
        return self.vertices[0]

    @property
    def end(self):
        return self.vertices[-1]


def spanning_tree(graph: FiniteGraph) -> tuple[int, ...]:
    """Deterministic breadth-first spanning tree, as canonical edge-orbit ids.

    Starts from the lowest vertex id and explores half-edges in ascending id
    order, so the result is reproducible.  Raises on disconnected input.
    """
    if not graph.vertices:
        return ()
    root = graph.vertices[0]
    seen = {root}
    tree: list[int] = []
    queue = deque([root])
    while queue:
        v = queue.popleft()
        for eid in graph.out_edges(v):
            w = graph.half_edges[eid].terminus
            if w not in seen:
                seen.add(w)
                tree.append(graph.orbit_of(eid))
                queue.append(w)
    if len(seen) != len(graph.vertices):
        raise DisconnectedGraphError(
            f"graph is disconnected: reached {len(seen)} of {len(graph.vertices)} vertices"
        )
    return tuple(sorted(tree))


def tree_potentials(graph: FiniteGraph, voltage: Mapping[int, tuple[int, ...]],
                    tree: Sequence[int]) -> dict[int, tuple[int, ...]]:
    """Voltage sum along the tree path from the root (lowest vertex) to each vertex."""
    tree_set = set(tree)
    adj: dict[int, list[int]] = {v: [] for v in graph.vertices}
    for orbit in tree_set:
        for eid in (orbit, graph.inverse(orbit)):
            adj[graph.half_edges[eid].origin].append(eid)
    for v in adj:
        adj[v].sort()
    root = graph.vertices[0]
    dim = len(next(iter(voltage.values()))) if voltage else 0
    pot = {root: (0,) * dim}
    queue = deque([root])
    while queue:
        v = queue.popleft()
        for eid in adj[v]:
            w = graph.half_edges[eid].terminus
            if w not in pot:
                pot[w] = tuple(a + b for a, b in zip(pot[v], voltage[eid]))
                queue.append(w)
    return pot


def lift_path(window, base_path: PathSeq, start_vertex: tuple[int, tuple[int, ...]]) -> LiftedPath:
    """Lift a base-graph path into a lattice window, starting at start_vertex.

    The lift is unique: each step moves to (terminus, index + voltage).
    Raises OutOfWindowError if any intermediate vertex leaves the window.
    """
    lattice = window.lattice
    graph = lattice.base
    u, z = start_vertex
    if not window.contains(u, z):
        raise OutOfWindowError((u, z), "start vertex is outside the window")
    if base_path.edges:
        first = graph.half_edges[base_path.edges[0]]
        if first.origin != u:
            raise GraphError(
                f"start vertex projects to {u}, not the origin {first.origin} of the first edge"
            )
    steps = []
    vertices = [(u, z)]
    for eid in base_path.edges:
        e = graph.half_edges[eid]
        if e.origin != u:
            raise GraphError(f"half-edge {eid} does not continue the path at {u}")
        z_next = tuple(a + b for a, b in zip(z, lattice.voltage[eid]))
        if not window.contains(e.terminus, z_next):
            raise OutOfWindowError((e.terminus, z_next))
        steps.append((eid, z))
        u, z = e.terminus, z_next
        vertices.append((u, z))
    return LiftedPath(tuple(steps), tuple(vertices))


def tree_partition(window, base_tree: Sequence[int]) -> dict[tuple[int, ...], frozenset]:
    """Lift a base spanning tree over every translation index where it fits.

    Returns {index: vertex set} for each index whose lifted copy of the tree
    lies entirely in the window.  The lifted copies are pairwise disjoint and
    cover exactly the window vertices whose tree-adjusted index is interior.
    """
    lattice = window.lattice
    graph = lattice.base
    pot = tree_potentials(graph, lattice.voltage, base_tree)
    out: dict[tuple[int, ...], frozenset] = {}
    for z in window.indices:
        copy = []
        ok = True
        for u in graph.vertices:
            zu = tuple(a + b for a, b in zip(z, pot[u]))
            if not window.contains(u, zu):
                ok = False
                break
            copy.append((u, zu))
        if ok:
            out[z] = frozenset(copy)
    return out


def graph_to_lines(graph: FiniteGraph,
                   voltage: Mapping[int, tuple[int, ...]] | None = None) -> list[str]:
    """Serialize a graph as text lines.

    Field order: ``halfedge <id> <origin> <terminus> <inverse> [voltage...]``.
    """
    lines = [f"vertices {len(graph.vertices)}"]
    lines += [f"vertex {v}" for v in graph.vertices]
    lines.append(f"halfedges {len(graph.half_edges)}")
    for eid, e in graph.half_edges.items():
        rec = f"halfedge {eid} {e.origin} {e.terminus} {e.inverse}"
        if voltage is not None:
            rec += " " + " ".join(str(c) for c in voltage[eid])
        lines.append(rec)
    return lines


def graph_from_lines(lines: Sequence[str], dim: int | None = None):
    """Inverse of graph_to_lines.  Returns (graph, voltage or None, rest)."""
    it = iter(lines)

    def next_tokens(expect: str) -> list[str]:
        for raw in it:
            s = raw.strip()
            if not s or s.startswith("#"):
                continue
            tok = s.split()
            if tok[0] != expect:
                raise GraphError(f"expected '{expect}' record, got {s!r}")
            return tok
        raise GraphError(f"unexpected end of input, expected '{expect}'")

    n = int(next_tokens("vertices")[1])
    vertices = [int(next_tokens("vertex")[1]) for _ in range(n)]
    m = int(next_tokens("halfedges")[1])
    half_edges = []
    voltage: dict[int, tuple[int, ...]] = {}
    has_voltage = False
    for _ in range(m):
        tok = next_tokens("halfedge")
        eid, o, t, inv = (int(x) for x in tok[1:5])
        half_edges.append(HalfEdge(eid, o, t, inv))
        if len(tok) > 5:
            has_voltage = True
            vec = tuple(int(x) for x in tok[5:])
            if dim is not None and len(vec) != dim:
                raise GraphError(f"voltage of half-edge {eid} has wrong dimension")
            voltage[eid] = vec
    rest = [s for s in it]
    return FiniteGraph(vertices, half_edges), (voltage if has_voltage else None), rest
