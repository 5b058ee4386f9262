"""W1-orientation of a graph, its edge/triple graphs and discrete divergences.

Functions on the oriented structure are plain numpy arrays indexed like
``Orientation.vertices`` (vertex functions), ``Orientation.edges`` (edge
functions) and ``Orientation.triples`` (triple functions).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Mapping

import numpy as np

from .graphs import Graph
from .transport import Measure, optimal_support_union


class OrientationError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class Orientation:
    """Directed acyclic structure on a subset of a graph's edges.

    ``vertices`` are the active vertices: endpoints of oriented edges plus
    any extra vertices (typically the supports of the endpoint measures).
    """

    base: Graph
    edges: tuple[tuple[int, int], ...]
    vertices: tuple[int, ...]
    f0: Measure | None = field(default=None, repr=False)
    f1: Measure | None = field(default=None, repr=False)

    @classmethod
    def from_edges(cls, base: Graph, edges, extra_vertices=(), f0=None, f1=None) -> Orientation:
        eset = {(int(x), int(y)) for x, y in edges}
        edges = tuple(sorted(eset))
        for x, y in edges:
            if not base.is_edge(x, y):
                raise OrientationError(f"({x}, {y}) is not an edge of the base graph")
            if (y, x) in eset:
                raise OrientationError(f"edge {{{x}, {y}}} oriented both ways")
        verts = {v for e in edges for v in e} | {int(v) for v in extra_vertices}
        return cls(base, edges, tuple(sorted(verts)), f0, f1)

    @cached_property
    def index(self) -> dict[int, int]:
        return {v: i for i, v in enumerate(self.vertices)}

    @cached_property
    def edge_index(self) -> dict[tuple[int, int], int]:
        return {e: i for i, e in enumerate(self.edges)}

    @cached_property
    def tail(self) -> np.ndarray:
        return np.array([self.index[x] for x, _ in self.edges], dtype=np.intp)

    @cached_property
    def head(self) -> np.ndarray:
        return np.array([self.index[y] for _, y in self.edges], dtype=np.intp)

    @cached_property
    def out_sets(self) -> dict[int, tuple[int, ...]]:
        """``F(x)``: successors of each active vertex."""
        out: dict[int, list[int]] = {v: [] for v in self.vertices}
        for x, y in self.edges:
            out[x].append(y)
        return {v: tuple(s) for v, s in out.items()}

    @cached_property
    def in_sets(self) -> dict[int, tuple[int, ...]]:
        """``E(x)``: predecessors of each active vertex."""
        out: dict[int, list[int]] = {v: [] for v in self.vertices}
        for x, y in self.edges:
            out[y].append(x)
        return {v: tuple(s) for v, s in out.items()}

    @cached_property
    def triples(self) -> tuple[tuple[int, int, int], ...]:
        return tuple(
            (x0, x1, x2) for x0, x1 in self.edges for x2 in self.out_sets[x1]
        )

    @cached_property
    def triple_first(self) -> np.ndarray:
        """Edge index of ``(x0 x1)`` for each triple."""
        return np.array([self.edge_index[t[0], t[1]] for t in self.triples], dtype=np.intp)

    @cached_property
    def triple_second(self) -> np.ndarray:
        """Edge index of ``(x1 x2)`` for each triple."""
        return np.array([self.edge_index[t[1], t[2]] for t in self.triples], dtype=np.intp)

    def triple_vertex(self, k: int) -> np.ndarray:
        """Vertex index of position ``k`` (0, 1 or 2) in each triple."""
        return np.array([self.index[t[k]] for t in self.triples], dtype=np.intp)

    @cached_property
    def in_degree(self) -> np.ndarray:
        return np.array([len(self.in_sets[v]) for v in self.vertices])

    @cached_property
    def out_degree(self) -> np.ndarray:
        return np.array([len(self.out_sets[v]) for v in self.vertices])

    @property
    def sources(self) -> list[int]:
        return [v for v in self.vertices if not self.in_sets[v]]

    @property
    def sinks(self) -> list[int]:
        return [v for v in self.vertices if not self.out_sets[v]]

    @cached_property
    def topological_order(self) -> tuple[int, ...]:
        indeg = {v: len(self.in_sets[v]) for v in self.vertices}
        queue = deque(v for v in self.vertices if indeg[v] == 0)
        order = []
        while queue:
            v = queue.popleft()
            order.append(v)
            for w in self.out_sets[v]:
                indeg[w] -= 1
                if indeg[w] == 0:
                    queue.append(w)
        if len(order) != len(self.vertices):
            raise OrientationError("orientation contains a directed cycle")
        return tuple(order)

    def is_acyclic(self) -> bool:
        try:
            self.topological_order
        except OrientationError:
            return False
        return True

    @cached_property
    def longest_path(self) -> int:
        depth = {v: 0 for v in self.vertices}
        for v in self.topological_order:
            for w in self.out_sets[v]:
                depth[w] = max(depth[w], depth[v] + 1)
        return max(depth.values(), default=0)

    def vertex_function(self, values) -> np.ndarray:
        return _as_array(values, self.vertices, "vertex")

    def edge_function(self, values) -> np.ndarray:
        return _as_array(values, self.edges, "oriented edge")

    def triple_function(self, values) -> np.ndarray:
        return _as_array(values, self.triples, "oriented triple")

    def as_dict(self, values, kind: str = "vertex") -> dict:
        keys = {"vertex": self.vertices, "edge": self.edges, "triple": self.triples}[kind]
        return {k: float(v) for k, v in zip(keys, values)}


def _as_array(values, keys, what) -> np.ndarray:
    if isinstance(values, Mapping):
        missing = [k for k in keys if k not in values]
        if missing:
            raise KeyError(f"function undefined on {what} {missing[0]}")
        return np.array([values[k] for k in keys], dtype=float)
    arr = np.asarray(values, dtype=float)
    if arr.shape != (len(keys),):
        raise ValueError(f"expected {len(keys)} {what} values, got shape {arr.shape}")
    return arr


def orient(g: Graph, f0: Measure, f1: Measure) -> Orientation:
    """W1-orientation of ``g`` with respect to ``(f0, f1)``.

    ``x -> y`` whenever the step lies on a geodesic between a pair charged by
    some W1-optimal coupling.
    """
    pairs = optimal_support_union(g, f0, f1)
    d = g.dist
    und = np.array(sorted(g.edges), dtype=np.intp).reshape(-1, 2)
    x = np.concatenate([und[:, 0], und[:, 1]])
    y = np.concatenate([und[:, 1], und[:, 0]])
    on = np.zeros(len(x), dtype=bool)
    for a, b in pairs:
        if a != b:
            on |= d[a, x] + 1 + d[y, b] == d[a, b]
    edges = list(zip(x[on].tolist(), y[on].tolist()))
    return Orientation.from_edges(g, edges, set(f0.mass) | set(f1.mass), f0, f1)


def geodesic_hull(g: Graph, pairs) -> set[int]:
    """Vertices on some geodesic between the given pairs."""
    out: set[int] = set()
    d = g.dist
    for a, b in pairs:
        out.update(np.flatnonzero(d[a] + d[:, b] == d[a, b]).tolist())
    return out


def divergence(o: Orientation, g) -> np.ndarray:
    """Vertex divergence ``sum_F g(x x2) - sum_E g(x0 x)`` of an edge function."""
    g = o.edge_function(g)
    out = np.zeros(len(o.vertices))
    np.add.at(out, o.tail, g)
    np.subtract.at(out, o.head, g)
    return out


def edge_divergence(o: Orientation, h) -> np.ndarray:
    """Divergence of a triple function, as a function on oriented edges."""
    h = o.triple_function(h)
    out = np.zeros(len(o.edges))
    np.add.at(out, o.triple_first, h)
    np.subtract.at(out, o.triple_second, h)
    return out


def divergence2(o: Orientation, h) -> np.ndarray:
    return divergence(o, edge_divergence(o, h))


@dataclass(frozen=True, eq=False)
class PathCounts:
    """Oriented path counts.

    ``A[x]`` counts oriented paths from a source to ``x``; ``B[x]`` from ``x``
    to a sink; ``eg`` is the number of extremal geodesics.
    """

    orientation: Orientation
    A: dict[int, int]
    B: dict[int, int]
    eg: int

    def m(self, *verts: int) -> Fraction:
        return m_weight(self, verts)


def path_counts(o: Orientation) -> PathCounts:
    order = o.topological_order
    A: dict[int, int] = {}
    for v in order:
        preds = o.in_sets[v]
        A[v] = sum(A[u] for u in preds) if preds else 1
    B: dict[int, int] = {}
    for v in reversed(order):
        succ = o.out_sets[v]
        B[v] = sum(B[w] for w in succ) if succ else 1
    eg = sum(B[s] for s in o.sources)
    return PathCounts(o, A, B, eg)


def m_weight(pc: PathCounts, verts) -> Fraction:
    """Fraction of extremal geodesics through a vertex, oriented edge or triple."""
    o = pc.orientation
    verts = tuple(int(v) for v in verts)
    if len(verts) == 1:
        (x,) = verts
        if x not in o.index:
            raise OrientationError(f"{x} is not an active vertex")
        return Fraction(pc.A[x] * pc.B[x], pc.eg)
    if len(verts) == 2:
        if verts not in o.edge_index:
            raise OrientationError(f"{verts} is not an oriented edge")
        return Fraction(pc.A[verts[0]] * pc.B[verts[1]], pc.eg)
    if len(verts) == 3:
        x0, x1, x2 = verts
        if (x0, x1) not in o.edge_index or (x1, x2) not in o.edge_index:
            raise OrientationError(f"{verts} is not an oriented triple")
        return Fraction(pc.A[x0] * pc.B[x2], pc.eg)
    raise OrientationError("m-weights are defined for 1, 2 or 3 vertices")


def maximal_paths(o: Orientation) -> list[tuple[int, ...]]:
    """Explicit list of extremal geodesics (for small orientations)."""
    out = []
    stack = [(s,) for s in o.sources]
    while stack:
        p = stack.pop()
        succ = o.out_sets[p[-1]]
        if not succ:
            out.append(p)
        for w in succ:
            stack.append(p + (w,))
    return out


def dump_orientation(o: Orientation, pc: PathCounts | None = None) -> str:
    """Text dump: ``x -> y`` lines, then ``A``, ``B`` and ``EG`` lines."""
    pc = pc or path_counts(o)
    lines = [f"{x} -> {y}" for x, y in o.edges]
    lines += [f"A {v} {pc.A[v]}" for v in o.vertices]
    lines += [f"B {v} {pc.B[v]}" for v in o.vertices]
    lines.append(f"EG {pc.eg}")
    return "\n".join(lines) + "\n"
