"""Orientations and BB-triples on product graphs.

A product graph built by :func:`w1plus.graphs.product` records its two
operands (``halves``) and the flat list of base factors. Every edge changes
exactly one flat coordinate; it belongs to class 1 or 2 according to the
operand that coordinate comes from.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .bbtriple import BBTriple, edge_energy, functional_I
from .geodesic import GeodesicCurve, eval_triple
from .graphs import Graph, product
from .orientation import Orientation, divergence, geodesic_hull, orient
from .transport import Measure, optimal_support_union

TENSOR_SLACK = 1e-8
CANONICAL_RTOL = 1e-9


class ProductError(ValueError):
    pass


def _require_product(g: Graph) -> tuple[Graph, Graph]:
    if g.halves is None:
        raise ProductError(f"{g.name or 'graph'} is not a product graph with explicit factors")
    return g.halves


@dataclass(frozen=True, eq=False)
class ProductOrientation:
    """An orientation on ``g1 x g2`` together with its edge classes."""

    orientation: Orientation

    @property
    def graph(self) -> Graph:
        return self.orientation.base

    @cached_property
    def split_axis(self) -> int:
        """Number of flat coordinates owned by the first operand."""
        g1, _ = _require_product(self.graph)
        return len(g1.factor_list)

    @cached_property
    def edge_class(self) -> np.ndarray:
        """1 or 2 per oriented edge: which operand's coordinate moves."""
        g = self.graph
        return np.array(
            [1 if g.edge_axis(x, y) < self.split_axis else 2 for x, y in self.orientation.edges],
            dtype=np.int8,
        )

    @cached_property
    def edge_axis(self) -> np.ndarray:
        g = self.graph
        return np.array([g.edge_axis(x, y) for x, y in self.orientation.edges], dtype=np.intp)

    def out_class(self, x: int, cls: int) -> tuple[int, ...]:
        """``F_i(x)``."""
        o = self.orientation
        return tuple(
            y for y in o.out_sets[x] if self.edge_class[o.edge_index[x, y]] == cls
        )

    def in_class(self, x: int, cls: int) -> tuple[int, ...]:
        """``E_i(x)``."""
        o = self.orientation
        return tuple(
            w for w in o.in_sets[x] if self.edge_class[o.edge_index[w, x]] == cls
        )

    @cached_property
    def squares(self) -> tuple[tuple[int, int, int, int], ...]:
        return tuple(enumerate_squares(self).squares)


def product_orientation(g: Graph, f0: Measure, f1: Measure) -> ProductOrientation:
    _require_product(g)
    return ProductOrientation(orient(g, f0, f1))


def marginal_measure(g: Graph, f: Measure, half: int) -> Measure:
    """Marginal of ``f`` on operand ``half`` (1 or 2), as a measure on its vertex ids."""
    g1, g2 = _require_product(g)
    n2 = g2.n
    out: dict[int, object] = {}
    for v, m in f.exact().items():
        key = v // n2 if half == 1 else v % n2
        out[key] = out.get(key, 0) + m
    return Measure(out)


def is_product_measure(g: Graph, f: Measure) -> bool:
    g1, g2 = _require_product(g)
    a, b = marginal_measure(g, f, 1), marginal_measure(g, f, 2)
    exact = f.exact()
    n2 = g2.n
    return all(
        exact.get(i * n2 + j, 0) == a.exact()[i] * b.exact()[j] for i in a.mass for j in b.mass
    ) and all(v // n2 in a.mass and v % n2 in b.mass for v in exact)


@dataclass
class DecompositionReport:
    direct: set
    composed: set
    product_measures: bool

    @property
    def equal(self) -> bool:
        return self.direct == self.composed

    @property
    def missing(self) -> set:
        """Edges of the direct orientation absent from the composed one."""
        return self.direct - self.composed

    @property
    def extra(self) -> set:
        return self.composed - self.direct


def composed_orientation_edges(g: Graph, f0: Measure, f1: Measure) -> set[tuple[int, int]]:
    """Product orientation assembled from the two marginal orientations.

    A step of operand 1 from ``x1`` to ``y1`` at a fixed second coordinate
    ``x2`` is oriented when ``x1 -> y1`` in the first marginal orientation and
    ``x2`` lies on a geodesic between a pair coupled in the second factor;
    symmetrically for operand 2.
    """
    g1, g2 = _require_product(g)
    n2 = g2.n
    a0, a1 = marginal_measure(g, f0, 1), marginal_measure(g, f1, 1)
    b0, b1 = marginal_measure(g, f0, 2), marginal_measure(g, f1, 2)
    o1, o2 = orient(g1, a0, a1), orient(g2, b0, b1)
    active1 = geodesic_hull(g1, optimal_support_union(g1, a0, a1))
    active2 = geodesic_hull(g2, optimal_support_union(g2, b0, b1))
    edges = set()
    for x1, y1 in o1.edges:
        for x2 in active2:
            edges.add((x1 * n2 + x2, y1 * n2 + x2))
    for x2, y2 in o2.edges:
        for x1 in active1:
            edges.add((x1 * n2 + x2, x1 * n2 + y2))
    return edges


def check_orientation_decomposition(g1: Graph, g2: Graph, f0: Measure, f1: Measure,
                                    g: Graph | None = None) -> DecompositionReport:
    """Compare the direct W1-orientation on ``g1 x g2`` with the composed one.

    The two agree whenever ``f0`` and ``f1`` are both product measures; the
    report records whether that hypothesis holds.
    """
    g = g if g is not None else product(g1, g2)
    direct = set(orient(g, f0, f1).edges)
    composed = composed_orientation_edges(g, f0, f1)
    prod_ok = is_product_measure(g, f0) and is_product_measure(g, f1)
    return DecompositionReport(direct, composed, prod_ok)


def split_divergence(po: ProductOrientation, g) -> tuple[np.ndarray, np.ndarray]:
    """``(div^(1) g, div^(2) g)``; their sum is the full divergence."""
    o = po.orientation
    g = o.edge_function(g)
    cls = po.edge_class
    return divergence(o, np.where(cls == 1, g, 0.0)), divergence(o, np.where(cls == 2, g, 0.0))


@dataclass
class SquareReport:
    squares: list
    formula_count: int
    t12: int
    t21: int

    @property
    def consistent(self) -> bool:
        return len(self.squares) == self.formula_count == self.t12 == self.t21


def _combine(g: Graph, split: int, a: int, b: int) -> int:
    """Vertex taking the first-operand coordinates of ``a`` and the rest from ``b``."""
    coords = list(g.coord(a)[:split]) + list(g.coord(b)[split:])
    return g.vertex(*coords)


def enumerate_squares(po: ProductOrientation) -> SquareReport:
    """Oriented product squares ``(x0, m1, m2, x2)``.

    ``m1`` is reached from ``x0`` by a class-1 step and ``m2`` by a class-2
    step; ``x2`` completes the square.
    """
    o = po.orientation
    g = po.graph
    split = po.split_axis
    out = []
    formula = 0
    for x0 in o.vertices:
        f1s, f2s = po.out_class(x0, 1), po.out_class(x0, 2)
        formula += len(f1s) * len(f2s)
        for m1 in f1s:
            for m2 in f2s:
                x2 = _combine(g, split, m1, m2)
                if x2 not in po.out_class(m1, 2) or x2 not in po.out_class(m2, 1):
                    raise ProductError(f"square from {x0} via {m1}, {m2} has no oriented corner")
                out.append((x0, m1, m2, x2))
    cls = po.edge_class
    first, second = cls[o.triple_first], cls[o.triple_second]
    t12 = int(np.sum((first == 1) & (second == 2)))
    t21 = int(np.sum((first == 2) & (second == 1)))
    return SquareReport(out, formula, t12, t21)


@dataclass(frozen=True, eq=False)
class _Slice:
    key: tuple
    orientation: Orientation
    vidx: np.ndarray
    eidx: np.ndarray
    tidx: np.ndarray

    def triple(self, tr: BBTriple) -> BBTriple:
        return BBTriple(self.orientation, tr.f[self.vidx], tr.g[self.eidx], tr.h[self.tidx])


def _mixed_radix(values, sizes) -> int:
    v = 0
    for c, s in zip(values, sizes):
        v = v * s + int(c)
    return v


def slices(o: Orientation, axes, factor: Graph) -> list[_Slice]:
    """Decompose ``o`` into slices moving only the flat coordinates ``axes``.

    ``factor`` is the graph those coordinates index (one base factor, or an
    operand of the product). Slices are keyed by the remaining coordinates.
    """
    g = o.base
    axes = tuple(axes)
    sizes = tuple(g.sizes[a] for a in axes)
    rest = tuple(a for a in range(len(g.sizes)) if a not in axes)
    coords = g.coordinates

    def key(v):
        return tuple(int(coords[v, a]) for a in rest)

    def local(v):
        return _mixed_radix((coords[v, a] for a in axes), sizes)

    groups: dict[tuple, list[int]] = {}
    for v in o.vertices:
        groups.setdefault(key(v), []).append(v)
    edges_by: dict[tuple, list[tuple[int, int]]] = {}
    for x, y in o.edges:
        if key(x) == key(y):
            edges_by.setdefault(key(x), []).append((x, y))
    tidx_map = {t: i for i, t in enumerate(o.triples)}
    out = []
    for k in sorted(groups):
        verts = groups[k]
        pe = edges_by.get(k, [])
        so = Orientation.from_edges(
            factor, [(local(x), local(y)) for x, y in pe], [local(v) for v in verts]
        )
        back = {local(v): v for v in verts}
        vidx = np.array([o.index[back[u]] for u in so.vertices], dtype=np.intp)
        eidx = np.array(
            [o.edge_index[back[a], back[b]] for a, b in so.edges], dtype=np.intp
        )
        tidx = np.array(
            [tidx_map[back[a], back[b], back[c]] for a, b, c in so.triples], dtype=np.intp
        )
        out.append(_Slice(k, so, vidx, eidx, tidx))
    return out


def _half_axes(g: Graph, axis: int) -> tuple[tuple[int, ...], Graph]:
    g1, g2 = _require_product(g)
    k = len(g1.factor_list)
    if axis == 1:
        return tuple(range(k)), g1
    if axis == 2:
        return tuple(range(k, len(g.sizes))), g2
    raise ProductError("axis must be 1 or 2")


def project_triple(tr: BBTriple, axis: int, fixed: int) -> BBTriple:
    """Restrict a product triple to the slice where the other operand sits at ``fixed``.

    ``axis`` selects the operand that moves (1 or 2); ``fixed`` is a vertex id
    of the other operand. An empty triple is returned for a slice with no
    active vertices.
    """
    o = tr.orientation
    g = o.base
    axes, factor = _half_axes(g, axis)
    other_graph = g.halves[2 - axis]
    want = tuple(int(c) for c in _other_coords(other_graph, fixed))
    for s in slices(o, axes, factor):
        if s.key == want:
            return s.triple(tr)
    empty = Orientation.from_edges(factor, [])
    return BBTriple(empty, np.zeros(0), np.zeros(0), np.zeros(0))


def _other_coords(g: Graph, v: int):
    if not 0 <= v < g.n:
        raise ProductError(f"vertex {v} outside the fixed factor")
    return g.coordinates[v]


def slice_sum(tr: BBTriple, slice_list) -> float:
    """Sum of the functional over slices; zero-mass slices contribute nothing."""
    total = 0.0
    for s in slice_list:
        st = s.triple(tr)
        if st.f.size == 0 or not np.any(st.f > 0):
            continue
        total += functional_I(st)
    return total


def canonical_defect(tr: BBTriple) -> float:
    """Largest relative spread of ``h`` among triples sharing both endpoints."""
    o = tr.orientation
    groups: dict[tuple[int, int], list[float]] = {}
    for (x0, _, x2), val in zip(o.triples, tr.h):
        groups.setdefault((x0, x2), []).append(float(val))
    worst = 0.0
    for vals in groups.values():
        if len(vals) > 1:
            hi, lo = max(vals), min(vals)
            worst = max(worst, (hi - lo) / max(abs(hi), 1e-300))
    return worst


@dataclass
class TensorizationReport:
    grid: np.ndarray
    Hpp: np.ndarray
    slice_sum_axis1: np.ndarray
    slice_sum_axis2: np.ndarray
    involutive_edge_bound: np.ndarray
    axis_sums: np.ndarray
    satisfied: np.ndarray
    extra: dict = field(default_factory=dict)

    @property
    def all_satisfied(self) -> bool:
        return bool(np.all(self.satisfied))

    def margin(self) -> float:
        """Smallest ``H'' - (slice sum)`` over the grid."""
        if not len(self.grid):
            return np.inf
        return float(np.min(self.Hpp - self.slice_sum_axis1 - self.slice_sum_axis2))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "Hpp", "slice_sum_axis1", "slice_sum_axis2",
                        "involutive_edge_bound", "satisfied"])
            for i, t in enumerate(self.grid):
                w.writerow([repr(float(t)), repr(float(self.Hpp[i])),
                            repr(float(self.slice_sum_axis1[i])),
                            repr(float(self.slice_sum_axis2[i])),
                            repr(float(self.involutive_edge_bound[i])),
                            int(bool(self.satisfied[i]))])


def involutive_mask(o: Orientation) -> np.ndarray:
    inv = o.base.involutive_edges
    return np.array([(min(x, y), max(x, y)) in inv for x, y in o.edges], dtype=bool)


def tensorization_check(c: GeodesicCurve, grid, slack: float = TENSOR_SLACK) -> TensorizationReport:
    """Compare ``H''`` with the slice sums along a canonical curve on a product.

    At each interior grid point ``t``:

    * ``slice_sum_axis1`` / ``slice_sum_axis2`` sum the functional over
      slices moving one operand with the other fixed;
    * ``axis_sums[:, i]`` do the same for every flat base factor;
    * ``involutive_edge_bound`` is the edge energy over edges whose
      generator is an involution.

    A grid point is satisfied when ``H''`` dominates all three lower bounds
    up to ``slack``.
    """
    o = c.orientation
    g = o.base
    _require_product(g)
    ax1, fac1 = _half_axes(g, 1)
    ax2, fac2 = _half_axes(g, 2)
    s1 = slices(o, ax1, fac1)
    s2 = slices(o, ax2, fac2)
    flat = [slices(o, (a,), f) for a, f in enumerate(g.factor_list)]
    mask = involutive_mask(o)
    ts = np.array([t for t in np.asarray(grid, float) if 0 < t < 1])
    n = len(ts)
    hpp, a1, a2, inv = (np.zeros(n) for _ in range(4))
    per_axis = np.zeros((n, len(flat)))
    ok = np.zeros(n, dtype=bool)
    for i, t in enumerate(ts):
        tr = eval_triple(c, t)
        if canonical_defect(tr) > CANONICAL_RTOL:
            raise ProductError("h depends on the middle vertex: curve is not canonical")
        hpp[i] = functional_I(tr)
        a1[i] = slice_sum(tr, s1)
        a2[i] = slice_sum(tr, s2)
        per_axis[i] = [slice_sum(tr, sl) for sl in flat]
        inv[i] = edge_energy(tr, mask) if mask.any() else 0.0
        ok[i] = (
            hpp[i] >= a1[i] + a2[i] - slack
            and hpp[i] >= per_axis[i].sum() - slack
            and hpp[i] >= inv[i] - slack
        )
    return TensorizationReport(ts, hpp, a1, a2, inv, per_axis, ok)
