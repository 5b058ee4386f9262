"""Optimal couplings on a graph metric.

W1 problems are solved exactly: masses are converted to rationals, scaled to
a common integer denominator and handed to a network simplex, whose integer
arithmetic leaves no round-off in the optimal value or the support.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from math import lcm

import networkx as nx
import numpy as np

MASS_TOL = 1e-12
MARGINAL_TOL = 1e-10
SUPPORT_THRESHOLD = 1e-9


class TransportError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class Measure:
    """Finitely supported probability measure on integer vertices.

    ``mass`` values may be floats, ints or :class:`~fractions.Fraction`;
    zero atoms are dropped.
    """

    mass: dict

    def __post_init__(self):
        clean = {}
        for x, m in self.mass.items():
            if m < 0:
                raise ValueError(f"negative mass {m} at vertex {x}")
            if m > 0:
                clean[int(x)] = m
        if not clean:
            raise ValueError("measure has empty support")
        total = sum(clean.values())
        if abs(float(total) - 1.0) > MASS_TOL:
            raise ValueError(f"total mass {float(total)!r} differs from 1")
        object.__setattr__(self, "mass", dict(sorted(clean.items())))

    @classmethod
    def normalized(cls, mass: dict, tol: float | None = None) -> Measure:
        """Rescale ``mass`` to unit total; with ``tol`` set, reject totals off by more."""
        total = sum(mass.values())
        if total <= 0:
            raise ValueError("measure has no mass")
        if tol is not None and abs(float(total) - 1.0) > tol:
            raise ValueError(f"total mass {float(total)!r} is not 1 within {tol}")
        if all(isinstance(v, (int, Fraction)) for v in mass.values()):
            total = Fraction(total)
        return cls({x: v / total for x, v in mass.items()})

    @classmethod
    def dirac(cls, x: int) -> Measure:
        return cls({x: 1})

    @classmethod
    def uniform(cls, points) -> Measure:
        points = list(points)
        return cls({x: Fraction(1, len(points)) for x in points})

    @classmethod
    def from_array(cls, values, tol: float | None = 1e-9) -> Measure:
        return cls.normalized({i: float(v) for i, v in enumerate(values) if v > 0}, tol=tol)

    @property
    def support(self) -> list[int]:
        return list(self.mass)

    def __getitem__(self, x: int):
        return self.mass.get(x, 0)

    def to_array(self, n: int) -> np.ndarray:
        out = np.zeros(n)
        for x, m in self.mass.items():
            out[x] = float(m)
        return out

    def exact(self) -> dict[int, Fraction]:
        """Masses as rationals rescaled to sum exactly to one."""
        fr = {x: Fraction(m) for x, m in self.mass.items()}
        total = sum(fr.values())
        return {x: v / total for x, v in fr.items()}

    def marginal(self, coords: np.ndarray, axes) -> dict[tuple, Fraction]:
        out: dict[tuple, Fraction] = {}
        for x, m in self.exact().items():
            key = tuple(int(coords[x, a]) for a in axes)
            out[key] = out.get(key, 0) + m
        return out


def read_measure(path, tol: float = 1e-6) -> Measure:
    """Parse ``vertex mass`` lines; renormalize when the total is 1 within ``tol``."""
    mass: dict[int, float] = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'vertex mass'")
            x = int(parts[0])
            mass[x] = mass.get(x, 0.0) + float(parts[1])
    return Measure.normalized(mass, tol=tol)


@dataclass(frozen=True, eq=False)
class Coupling:
    """Transport plan; ``mass`` maps ``(x, y)`` to a positive amount."""

    mass: dict
    left: Measure
    right: Measure

    def __post_init__(self):
        rows: dict[int, float] = {}
        cols: dict[int, float] = {}
        for (x, y), m in self.mass.items():
            if not m > 0:
                raise ValueError("coupling entries must be strictly positive")
            rows[x] = rows.get(x, 0) + m
            cols[y] = cols.get(y, 0) + m
        for marg, sums in ((self.left, rows), (self.right, cols)):
            keys = set(marg.mass) | set(sums)
            if any(abs(float(sums.get(k, 0)) - float(marg[k])) > MARGINAL_TOL for k in keys):
                raise ValueError("coupling marginals do not match")

    @property
    def support(self) -> set[tuple[int, int]]:
        return set(self.mass)

    def cost(self, cost) -> float:
        """``sum c(x, y) pi(x, y)`` for a cost matrix or callable."""
        if callable(cost):
            return float(sum(cost(x, y) * m for (x, y), m in self.mass.items()))
        return float(sum(cost[x, y] * m for (x, y), m in self.mass.items()))


@dataclass
class _IntegerProblem:
    sources: list[int]
    sinks: list[int]
    supply: dict[int, int]
    demand: dict[int, int]
    scale: int


def _integer_problem(f0: Measure, f1: Measure) -> _IntegerProblem:
    e0, e1 = f0.exact(), f1.exact()
    scale = reduce(lcm, (v.denominator for v in [*e0.values(), *e1.values()]), 1)
    supply = {x: int(v * scale) for x, v in e0.items()}
    demand = {y: int(v * scale) for y, v in e1.items()}
    return _IntegerProblem(list(e0), list(e1), supply, demand, scale)


def _network(dist, prob: _IntegerProblem, weight=None) -> nx.DiGraph:
    net = nx.DiGraph()
    for a in prob.sources:
        net.add_node(("s", a), demand=-prob.supply[a])
    for b in prob.sinks:
        net.add_node(("t", b), demand=prob.demand[b])
    for a in prob.sources:
        for b in prob.sinks:
            w = int(dist[a, b]) if weight is None else weight(a, b)
            net.add_edge(("s", a), ("t", b), weight=w)
    return net


def _solve(dist, prob: _IntegerProblem, weight=None):
    try:
        cost, flow = nx.network_simplex(_network(dist, prob, weight))
    except nx.NetworkXException as exc:  # infeasible / unbounded
        raise TransportError(f"transport problem failed: {exc}") from exc
    plan = {}
    for a in prob.sources:
        for (_, b), v in flow[("s", a)].items():
            if v:
                plan[a, b] = v
    return cost, plan


def _dist(g):
    return g.dist if hasattr(g, "dist") else np.asarray(g)


def w1_cost_exact(g, f0: Measure, f1: Measure) -> Fraction:
    prob = _integer_problem(f0, f1)
    cost, _ = _solve(_dist(g), prob)
    return Fraction(cost, prob.scale)


def w1_cost(g, f0: Measure, f1: Measure) -> float:
    """W1 distance between two measures on graph ``g`` (or a distance matrix)."""
    return float(w1_cost_exact(g, f0, f1))


def optimal_coupling(g, f0: Measure, f1: Measure) -> Coupling:
    """One W1-optimal coupling, a vertex of the transport polytope."""
    prob = _integer_problem(f0, f1)
    _, plan = _solve(_dist(g), prob)
    return Coupling({k: Fraction(v, prob.scale) for k, v in plan.items()}, f0, f1)


def max_pair_mass(g, f0: Measure, f1: Measure, a: int, b: int) -> Fraction:
    """Largest ``pi(a, b)`` over all W1-optimal couplings.

    Solved as one lexicographic min-cost flow: the transport cost is weighted
    by ``scale + 1`` so that no gain on ``(a, b)`` (at most ``scale`` units)
    can pay for a single unit of extra transport cost.
    """
    dist = _dist(g)
    prob = _integer_problem(f0, f1)
    big = prob.scale + 1

    def weight(x, y):
        return big * int(dist[x, y]) - (1 if (x, y) == (a, b) else 0)

    _, plan = _solve(dist, prob, weight)
    return Fraction(plan.get((a, b), 0), prob.scale)


def in_some_optimal_support(g, f0: Measure, f1: Measure, a: int, b: int) -> bool:
    """Whether some W1-optimal coupling charges the pair ``(a, b)``."""
    if a not in f0.mass or b not in f1.mass:
        raise ValueError("pair must lie in supp(f0) x supp(f1)")
    return float(max_pair_mass(g, f0, f1, a, b)) > SUPPORT_THRESHOLD


def optimal_support_union(g, f0: Measure, f1: Measure) -> set[tuple[int, int]]:
    """Union of the supports of all W1-optimal couplings.

    Fast path equivalent to calling :func:`in_some_optimal_support` on every
    pair. From one exact optimal plan, node potentials come from shortest
    paths in the residual graph; a pair can carry mass in some optimal plan
    iff its reduced cost is zero and both ends are strongly connected through
    zero-reduced-cost arcs.
    """
    dist = _dist(g)
    prob = _integer_problem(f0, f1)
    _, plan = _solve(dist, prob)
    res = nx.DiGraph()
    root = ("root",)
    for a in prob.sources:
        res.add_edge(root, ("s", a), weight=0)
        for b in prob.sinks:
            res.add_edge(("s", a), ("t", b), weight=int(dist[a, b]))
    for b in prob.sinks:
        res.add_edge(root, ("t", b), weight=0)
    for (a, b) in plan:
        res.add_edge(("t", b), ("s", a), weight=-int(dist[a, b]))
    try:
        pot = nx.single_source_bellman_ford_path_length(res, root)
    except nx.NetworkXUnbounded as exc:
        raise TransportError("optimal plan has a negative residual cycle") from exc
    tight = nx.DiGraph()
    tight.add_nodes_from(n for n in res if n != root)
    for a in prob.sources:
        for b in prob.sinks:
            if int(dist[a, b]) + pot[("s", a)] - pot[("t", b)] == 0:
                tight.add_edge(("s", a), ("t", b))
    for (a, b) in plan:
        tight.add_edge(("t", b), ("s", a))
    comp = {}
    for i, scc in enumerate(nx.strongly_connected_components(tight)):
        for node in scc:
            comp[node] = i
    out = set(plan)
    for (u, v) in tight.edges:
        if u[0] == "s" and comp[u] == comp[v]:
            out.add((u[1], v[1]))
    return out


def w2_monotone_coupling(f0: Measure, f1: Measure) -> Coupling:
    """Quantile coupling on the integer line, the unique W2-optimal plan."""
    e0 = sorted(f0.exact().items())
    e1 = sorted(f1.exact().items())
    i = j = 0
    r0, r1 = e0[0][1], e1[0][1]
    plan: dict[tuple[int, int], Fraction] = {}
    while i < len(e0) and j < len(e1):
        m = min(r0, r1)
        if m > 0:
            key = (e0[i][0], e1[j][0])
            plan[key] = plan.get(key, 0) + m
        r0 -= m
        r1 -= m
        if r0 == 0:
            i += 1
            if i < len(e0):
                r0 = e0[i][1]
        if r1 == 0:
            j += 1
            if j < len(e1):
                r1 = e1[j][1]
    return Coupling(plan, f0, f1)


def cdf_w1(f0: Measure, f1: Measure) -> float:
    """W1 on the integer line as ``sum_k |F0(k) - F1(k)|``."""
    lo = min(min(f0.mass), min(f1.mass))
    hi = max(max(f0.mass), max(f1.mass))
    e0, e1 = f0.exact(), f1.exact()
    c0 = c1 = Fraction(0)
    total = Fraction(0)
    for k in range(lo, hi):
        c0 += e0.get(k, 0)
        c1 += e1.get(k, 0)
        total += abs(c0 - c1)
    return float(total)
