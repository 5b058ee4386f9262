"""Finite graphs with a precomputed path metric.

Vertices are dense integers ``0..n-1``. Product graphs keep a flat tuple of
factor coordinates per vertex, encoded in mixed radix (``i * |V2| + j`` for a
two-factor product), so products of products behave uniformly.
"""

from __future__ import annotations

import os
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from math import prod

import numpy as np

MAX_VERTICES = 4096
MAX_GEODESICS = 10**6


class GraphError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Graph:
    """Connected simple undirected graph.

    Attributes
    ----------
    n : int
        Number of vertices, labelled ``0..n-1``.
    edges : frozenset of (int, int)
        Unordered edges stored as ``(u, v)`` with ``u < v``.
    dist : ndarray of int32, shape (n, n)
        All-pairs graph distances.
    factors : tuple of Graph
        Flat list of base factors; ``(self,)`` for a non-product graph.
    coords : ndarray of int, shape (n, len(factors))
        Factor coordinates of each vertex.
    halves : tuple of Graph or None
        The two operands when the graph was built by :func:`product`.
    involutive_edges : frozenset of (int, int)
        Edges generated by an involution, for Cayley graphs.
    """

    n: int
    edges: frozenset
    dist: np.ndarray = field(repr=False)
    name: str = ""
    factors: tuple = field(default=(), repr=False)
    coords: np.ndarray | None = field(default=None, repr=False)
    halves: tuple | None = field(default=None, repr=False)
    involutive_edges: frozenset = field(default=frozenset(), repr=False)

    @property
    def vertices(self) -> range:
        return range(self.n)

    @cached_property
    def neighbors(self) -> tuple[tuple[int, ...], ...]:
        nb: list[list[int]] = [[] for _ in range(self.n)]
        for u, v in self.edges:
            nb[u].append(v)
            nb[v].append(u)
        return tuple(tuple(sorted(a)) for a in nb)

    @property
    def factor_list(self) -> tuple[Graph, ...]:
        return self.factors if self.factors else (self,)

    @property
    def coordinates(self) -> np.ndarray:
        if self.coords is None:
            return np.arange(self.n)[:, None]
        return self.coords

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(f.n for f in self.factor_list)

    def vertex(self, *coords: int) -> int:
        """Vertex id from flat factor coordinates."""
        if len(coords) == 1 and isinstance(coords[0], (tuple, list)):
            coords = tuple(coords[0])
        sizes = self.sizes
        if len(coords) != len(sizes):
            raise GraphError(f"expected {len(sizes)} coordinates, got {len(coords)}")
        v = 0
        for c, s in zip(coords, sizes):
            if not 0 <= c < s:
                raise GraphError(f"coordinate {c} out of range for factor of size {s}")
            v = v * s + int(c)
        return v

    def coord(self, v: int) -> tuple[int, ...]:
        return tuple(int(c) for c in self.coordinates[v])

    def is_edge(self, u: int, v: int) -> bool:
        return (min(u, v), max(u, v)) in self.edges

    def is_curve(self, points) -> bool:
        return len(points) > 0 and all(
            self.is_edge(a, b) for a, b in zip(points[:-1], points[1:])
        )

    def is_geodesic(self, points) -> bool:
        return self.is_curve(points) and self.dist[points[0], points[-1]] == len(points) - 1

    def edge_axis(self, u: int, v: int) -> int:
        """Index of the flat factor coordinate that changes along edge ``u - v``."""
        diff = np.flatnonzero(self.coordinates[u] != self.coordinates[v])
        if len(diff) != 1:
            raise GraphError(f"({u}, {v}) does not change exactly one coordinate")
        return int(diff[0])


def _bfs_distances(n: int, nbrs) -> np.ndarray:
    dist = np.full((n, n), -1, dtype=np.int32)
    for s in range(n):
        row = dist[s]
        row[s] = 0
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for w in nbrs[u]:
                if row[w] < 0:
                    row[w] = row[u] + 1
                    queue.append(w)
    return dist


def from_edges(edges, n: int | None = None, name: str = "") -> Graph:
    """Build a connected simple graph from an iterable of vertex pairs."""
    clean = set()
    seen = set()
    for u, v in edges:
        u, v = int(u), int(v)
        if u < 0 or v < 0:
            raise GraphError("vertex identifiers must be non-negative")
        if u == v:
            raise GraphError(f"loop at vertex {u}")
        clean.add((min(u, v), max(u, v)))
        seen.update((u, v))
    if n is None:
        if not seen:
            raise GraphError("empty vertex set")
        if seen != set(range(max(seen) + 1)):
            # relabel densely, preserving order
            order = sorted(seen)
            relabel = {v: i for i, v in enumerate(order)}
            clean = {(relabel[u], relabel[v]) for u, v in clean}
            n = len(order)
        else:
            n = max(seen) + 1
    if n <= 0:
        raise GraphError("empty vertex set")
    if n > MAX_VERTICES:
        raise GraphError(f"graph has {n} vertices, cap is {MAX_VERTICES}")
    if any(v >= n for e in clean for v in e):
        raise GraphError("edge endpoint outside vertex range")
    nbrs: list[list[int]] = [[] for _ in range(n)]
    for u, v in clean:
        nbrs[u].append(v)
        nbrs[v].append(u)
    dist = _bfs_distances(n, nbrs)
    if (dist < 0).any():
        raise GraphError("graph is disconnected")
    return Graph(n=n, edges=frozenset(clean), dist=dist, name=name)


def path_graph(n: int) -> Graph:
    """Segment ``{0, ..., n-1}`` of the integer line."""
    if n < 1:
        raise GraphError("empty vertex set")
    if n == 1:
        return Graph(n=1, edges=frozenset(), dist=np.zeros((1, 1), np.int32), name="path 1")
    return from_edges([(k, k + 1) for k in range(n - 1)], n=n, name=f"path {n}")


def cycle_graph(r: int) -> Graph:
    if r < 3:
        raise GraphError("cycle length must be at least 3")
    return from_edges([(k, (k + 1) % r) for k in range(r)], n=r, name=f"cycle {r}")


def complete_graph(n: int) -> Graph:
    if n < 1:
        raise GraphError("empty vertex set")
    if n == 1:
        return path_graph(1)
    return from_edges(
        [(i, j) for i in range(n) for j in range(i + 1, n)], n=n, name=f"complete {n}"
    )


def product(g1: Graph, g2: Graph) -> Graph:
    """Cartesian product with the sum metric.

    Vertex ``(i, j)`` gets id ``i * g2.n + j``; flat coordinates are the
    concatenation of the operands' coordinates.
    """
    n1, n2 = g1.n, g2.n
    n = n1 * n2
    if n > MAX_VERTICES:
        raise GraphError(f"product has {n} vertices, cap is {MAX_VERTICES}")
    edges = set()
    for i in range(n1):
        for u, v in g2.edges:
            edges.add((i * n2 + u, i * n2 + v))
    for u, v in g1.edges:
        for j in range(n2):
            edges.add((u * n2 + j, v * n2 + j))
    dist = (g1.dist[:, None, :, None] + g2.dist[None, :, None, :]).reshape(n, n)
    coords = np.concatenate(
        [np.repeat(g1.coordinates, n2, axis=0), np.tile(g2.coordinates, (n1, 1))], axis=1
    )
    invol = {(i * n2 + u, i * n2 + v) for i in range(n1) for u, v in g2.involutive_edges}
    invol |= {(u * n2 + j, v * n2 + j) for u, v in g1.involutive_edges for j in range(n2)}
    return Graph(
        n=n,
        edges=frozenset(edges),
        dist=dist.astype(np.int32),
        name=f"({g1.name}) x ({g2.name})",
        factors=g1.factor_list + g2.factor_list,
        coords=coords,
        halves=(g1, g2),
        involutive_edges=frozenset(invol),
    )


def product_of(*graphs: Graph) -> Graph:
    """Left-nested product ``((g1 x g2) x g3) x ...``."""
    if not graphs:
        raise GraphError("empty product")
    out = graphs[0]
    for g in graphs[1:]:
        out = product(out, g)
    return out


def hypercube(n: int) -> Graph:
    if n < 1:
        raise GraphError("hypercube dimension must be positive")
    g = product_of(*[path_graph(2)] * n)
    return _renamed(g, f"hypercube {n}")


def cyclic_group(r: int) -> Graph:
    """Cayley graph of Z/rZ with generator 1; r = 2 gives a single involutive edge."""
    if r == 2:
        g = path_graph(2)
        return Graph(n=2, edges=g.edges, dist=g.dist, name="Z_2", involutive_edges=g.edges)
    g = cycle_graph(r)
    return _renamed(g, f"Z_{r}")


def cayley_graph(factors) -> Graph:
    """Product of integer segments and cyclic groups.

    ``factors`` is a sequence of ``("Z", n)`` (segment of length n) or
    ``("Zr", r)`` entries. Edges of Z_2 factors are tagged involutive.
    """
    parts = []
    for kind, size in factors:
        if kind == "Z":
            parts.append(path_graph(int(size)))
        elif kind in ("Zr", "cyclic"):
            parts.append(cyclic_group(int(size)))
        else:
            raise GraphError(f"unknown Cayley factor {kind!r}")
    return product_of(*parts)


def _renamed(g: Graph, name: str) -> Graph:
    return Graph(
        n=g.n,
        edges=g.edges,
        dist=g.dist,
        name=name,
        factors=g.factors,
        coords=g.coords,
        halves=g.halves,
        involutive_edges=g.involutive_edges,
    )


def read_edge_list(path) -> Graph:
    """Parse the edge-list text format: two integers per line, ``#`` comments."""
    edges = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise GraphError(f"{path}:{lineno}: expected two integers")
            try:
                edges.append((int(parts[0]), int(parts[1])))
            except ValueError as exc:
                raise GraphError(f"{path}:{lineno}: {exc}") from None
    return from_edges(edges, name=os.path.basename(str(path)))


_FAMILIES = {
    "path": path_graph,
    "segment": path_graph,
    "cycle": cycle_graph,
    "complete": complete_graph,
    "hypercube": hypercube,
    "cube": hypercube,
    "cyclic": cyclic_group,
}


def build_graph(spec) -> Graph:
    """Build a graph from a textual or structured description.

    Accepted forms::

        "path 4"  "cycle 5"  "complete 3"  "hypercube 2"  "cyclic 2"
        {"family": "path", "n": 4}
        {"product": [spec, spec, ...]}
        {"cayley": [["Z", 4], ["Zr", 2]]}
        {"edges": "graph.txt"}     or  {"edges": [[0, 1], [1, 2]]}
        "file:graph.txt"
    """
    if isinstance(spec, Graph):
        return spec
    if isinstance(spec, str):
        s = spec.strip()
        if s.startswith("file:"):
            return read_edge_list(s[5:])
        parts = s.replace(":", " ").split()
        if len(parts) == 2 and parts[0] in _FAMILIES:
            return _FAMILIES[parts[0]](int(parts[1]))
        if os.path.exists(s):
            return read_edge_list(s)
        raise GraphError(f"cannot parse graph specification {spec!r}")
    if isinstance(spec, dict):
        if "product" in spec:
            return product_of(*[build_graph(s) for s in spec["product"]])
        if "cayley" in spec:
            return cayley_graph(spec["cayley"])
        if "edges" in spec:
            e = spec["edges"]
            if isinstance(e, str):
                return read_edge_list(e)
            return from_edges(e)
        if "family" in spec:
            fam = spec["family"]
            if fam not in _FAMILIES:
                raise GraphError(f"unknown graph family {fam!r}")
            return _FAMILIES[fam](int(spec["n"]))
    raise GraphError(f"cannot parse graph specification {spec!r}")


def enumerate_geodesics(g: Graph, x: int, y: int, limit: int = MAX_GEODESICS) -> list[tuple[int, ...]]:
    """All geodesics from ``x`` to ``y``, as vertex tuples.

    Distance-filtered depth-first search: from the current vertex only
    neighbours one step closer to ``y`` are explored.
    """
    dy = g.dist[:, y]
    nbrs = g.neighbors
    out: list[tuple[int, ...]] = []
    stack = [(x,)]
    while stack:
        cur = stack.pop()
        u = cur[-1]
        if u == y:
            out.append(cur)
            if len(out) > limit:
                raise GraphError(f"more than {limit} geodesics between {x} and {y}")
            continue
        for w in reversed(nbrs[u]):
            if dy[w] == dy[u] - 1:
                stack.append(cur + (w,))
    return out


def count_geodesics(g: Graph, x: int, y: int) -> int:
    """``|Gamma_{x,y}|`` by dynamic programming over distance layers."""
    dx = g.dist[x]
    d = int(dx[y])
    on = [v for v in g.vertices if dx[v] + g.dist[v, y] == d]
    on.sort(key=lambda v: dx[v])
    count = {x: 1}
    for v in on:
        if v == x:
            continue
        count[v] = sum(count.get(w, 0) for w in g.neighbors[v] if dx[w] == dx[v] - 1)
    return count[y]
