"""Canonical W1,+ geodesics.

The curve is carried by two families of polynomials in ``t`` on the active
vertices, ``p`` and ``q``, with

    f_t(x)        = p_t(x) q_t(x) / |EG|
    g_t(x0 x1)    = p_t(x0) q_t(x1) / |EG|
    h_t(x0 x1 x2) = p_t(x0) q_t(x2) / |EG|

Substituting this form into ``df/dt = -div g`` and ``dg/dt = -div h`` gives
the transport system ``p' = sum_{E(x)} p``, ``q' = -sum_{F(x)} q``, so ``p`` is
fixed by ``p_0`` and ``q`` by ``q_1``. The two boundary values are found by
alternating proportional fitting against ``f0`` and ``f1``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from math import factorial

import numpy as np
from numpy.polynomial import polynomial as P

from .bbtriple import BBTriple
from .orientation import Orientation, PathCounts, divergence, edge_divergence, path_counts
from .transport import Measure, w1_cost

DEGENERATE = 1e-14


class GeodesicError(RuntimeError):
    pass


class ConvergenceError(GeodesicError):
    def __init__(self, message, residual):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True, eq=False)
class PolynomialFamily:
    """One polynomial per vertex; ``coeffs[i, k]`` multiplies ``(t - origin)**k``.

    ``q`` is expanded around ``t = 1`` so that factors like ``(1 - t)**n`` keep
    full relative precision near the right endpoint.
    """

    vertices: tuple[int, ...]
    coeffs: np.ndarray
    origin: float = 0.0

    def __call__(self, t) -> np.ndarray:
        return P.polyval(np.asarray(t) - self.origin, self.coeffs.T)

    @property
    def degree(self) -> int:
        return self.coeffs.shape[1] - 1

    def deriv(self) -> PolynomialFamily:
        if self.degree == 0:
            return PolynomialFamily(self.vertices, np.zeros_like(self.coeffs), self.origin)
        return PolynomialFamily(self.vertices, P.polyder(self.coeffs, axis=1), self.origin)

    def monomial(self) -> np.ndarray:
        """Coefficients in powers of ``t``."""
        if self.origin == 0.0:
            return self.coeffs
        shift = P.Polynomial([-self.origin, 1.0])
        out = np.zeros_like(self.coeffs)
        for i, row in enumerate(self.coeffs):
            c = P.Polynomial(row)(shift).coef
            out[i, : len(c)] = c
        return out


def _transfer_matrix(o: Orientation) -> np.ndarray:
    """``exp(M)`` for the nilpotent forward adjacency ``M`` (``p' = M p``)."""
    n = len(o.vertices)
    M = np.zeros((n, n))
    M[o.head, o.tail] = 1.0
    K = np.eye(n)
    term = np.eye(n)
    for k in range(1, o.longest_path + 1):
        term = term @ M / k
        K += term
    return K


def _integrate_families(o: Orientation, p0: np.ndarray, q1: np.ndarray):
    deg = o.longest_path
    n = len(o.vertices)
    idx = o.index
    pc = np.zeros((n, deg + 1))
    qc = np.zeros((n, deg + 1))
    if deg == 0:
        pc[:, 0], qc[:, 0] = p0, q1
        return PolynomialFamily(o.vertices, pc), PolynomialFamily(o.vertices, qc, 1.0)
    for v in o.topological_order:
        i = idx[v]
        src = np.zeros(deg + 1)
        for u in o.in_sets[v]:
            src += pc[idx[u]]
        c = P.polyint(src[:deg], k=[p0[i]], lbnd=0)
        pc[i, : len(c)] = c
    for v in reversed(o.topological_order):
        i = idx[v]
        src = np.zeros(deg + 1)
        for w in o.out_sets[v]:
            src += qc[idx[w]]
        c = P.polyint(-src[:deg], k=[q1[i]], lbnd=0)
        qc[i, : len(c)] = c
    return PolynomialFamily(o.vertices, pc), PolynomialFamily(o.vertices, qc, 1.0)


@dataclass(frozen=True, eq=False)
class GeodesicCurve:
    orientation: Orientation
    counts: PathCounts
    p: PolynomialFamily
    q: PolynomialFamily
    f0: Measure
    f1: Measure
    residual: float
    iterations: int = 0
    meta: dict = field(default_factory=dict, repr=False)

    @property
    def eg(self) -> int:
        return self.counts.eg

    def f(self, t: float) -> np.ndarray:
        return self.p(t) * self.q(t) / self.eg

    def g(self, t: float) -> np.ndarray:
        o = self.orientation
        return self.p(t)[o.tail] * self.q(t)[o.head] / self.eg

    def h(self, t: float) -> np.ndarray:
        o = self.orientation
        if not o.triples:
            return np.zeros(0)
        return self.p(t)[o.triple_vertex(0)] * self.q(t)[o.triple_vertex(2)] / self.eg

    def measure(self, t: float) -> Measure:
        vals = np.clip(self.f(t), 0.0, None)
        return Measure.normalized(
            {v: float(m) for v, m in zip(self.orientation.vertices, vals) if m > 0}, tol=1e-8
        )


def solve_canonical(
    o: Orientation,
    pc: PathCounts | None,
    f0: Measure,
    f1: Measure,
    tol: float = 1e-10,
    max_iter: int = 100_000,
) -> GeodesicCurve:
    """Canonical W1,+ geodesic from ``f0`` to ``f1`` on orientation ``o``.

    Raises
    ------
    GeodesicError
        When ``q_0`` or ``p_1`` vanishes at a vertex carrying endpoint mass.
    ConvergenceError
        When the fitting has not reached ``tol`` after ``max_iter`` rounds.
    """
    pc = pc or path_counts(o)
    n = len(o.vertices)
    idx = o.index
    if any(x not in idx for x in [*f0.mass, *f1.mass]):
        raise GeodesicError("endpoint support outside the orientation's active vertices")
    a = np.zeros(n)
    b = np.zeros(n)
    for x, m in f0.mass.items():
        a[idx[x]] = float(m)
    for x, m in f1.mass.items():
        b[idx[x]] = float(m)
    eg = pc.eg
    K = _transfer_matrix(o)
    has0, has1 = a > 0, b > 0
    q1 = np.where(has1, 1.0, 0.0) if o.edges else np.ones(n)
    residual = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        q0 = K.T @ q1
        if np.any(has0 & (q0 < DEGENERATE)):
            raise GeodesicError("degenerate boundary system: q_0 vanishes on supp(f0)")
        p0 = np.where(has0, eg * a / np.where(has0, q0, 1.0), 0.0)
        p1 = K @ p0
        if np.any(has1 & (p1 < DEGENERATE)):
            raise GeodesicError("degenerate boundary system: p_1 vanishes on supp(f1)")
        q1 = np.where(has1, eg * b / np.where(has1, p1, 1.0), 0.0)
        scale = q1.max()
        q1 = q1 / scale
        p0 = p0 * scale
        r0 = 0.5 * np.abs(p0 * (K.T @ q1) / eg - a).sum()
        r1 = 0.5 * np.abs((K @ p0) * q1 / eg - b).sum()
        residual = max(r0, r1)
        if residual < tol:
            break
    else:
        raise ConvergenceError("IPFP did not converge", residual)
    p, q = _integrate_families(o, p0, q1)
    return GeodesicCurve(o, pc, p, q, f0, f1, float(residual), it)


def eval_triple(c: GeodesicCurve, t: float) -> BBTriple:
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t = {t} outside [0, 1]")
    return BBTriple(c.orientation, c.f(t), c.g(t), c.h(t))


def canonical_geodesic(g, f0: Measure, f1: Measure, **kwargs) -> GeodesicCurve:
    """Orient ``g`` for ``(f0, f1)`` and solve for the canonical geodesic."""
    from .orientation import orient

    o = orient(g, f0, f1)
    return solve_canonical(o, path_counts(o), f0, f1, **kwargs)


def _conv_rows(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise polynomial products of two coefficient arrays."""
    if len(a) == 0:
        return np.zeros((0, a.shape[1] + b.shape[1] - 1))
    return np.array([np.convolve(x, y) for x, y in zip(a, b)])


def coefficient_families(c: GeodesicCurve):
    """Coefficient arrays of ``f``, ``g``, ``h`` as polynomials in ``t``."""
    o = c.orientation
    pcoef, qcoef = c.p.monomial(), c.q.monomial()
    f = _conv_rows(pcoef, qcoef) / c.eg
    g = _conv_rows(pcoef[o.tail], qcoef[o.head]) / c.eg
    if o.triples:
        h = _conv_rows(pcoef[o.triple_vertex(0)], qcoef[o.triple_vertex(2)]) / c.eg
    else:
        h = np.zeros((0, f.shape[1]))
    return f, g, h


def _div_coeffs(fn, coeffs):
    if coeffs.shape[0] == 0:
        return None
    return np.stack([fn(col) for col in coeffs.T], axis=1)


@dataclass
class ContinuityReport:
    mass_defect: float
    f_equation: float
    g_equation: float
    bb_equation: float

    def ok(self, tol: float = 1e-9) -> bool:
        return max(self.mass_defect, self.f_equation, self.g_equation, self.bb_equation) <= tol


def continuity_residuals(c: GeodesicCurve) -> ContinuityReport:
    """Largest coefficient of each polynomial identity the curve must satisfy.

    ``sum f - 1``, ``f' + div g``, ``g' + div h`` and the BB equation
    ``f(x1) h - g g`` are all identically zero as polynomials in ``t``.
    """
    o = c.orientation
    f, g, h = coefficient_families(c)
    mass = f.sum(axis=0)
    mass[0] -= 1.0
    fder = P.polyder(f, axis=1) if f.shape[1] > 1 else np.zeros_like(f)
    fder = np.pad(fder, ((0, 0), (0, f.shape[1] - fder.shape[1])))
    dg = _div_coeffs(lambda col: divergence(o, col), g) if o.edges else np.zeros_like(f)
    f_eq = float(np.abs(fder + dg).max()) if f.size else 0.0
    g_eq = 0.0
    bb = 0.0
    if o.edges:
        gder = P.polyder(g, axis=1) if g.shape[1] > 1 else np.zeros_like(g)
        gder = np.pad(gder, ((0, 0), (0, g.shape[1] - gder.shape[1])))
        dh = _div_coeffs(lambda col: edge_divergence(o, col), h) if o.triples else 0.0
        g_eq = float(np.abs(gder + dh).max())
    if o.triples:
        lhs = _conv_rows(f[o.triple_vertex(1)], h)
        rhs = _conv_rows(g[o.triple_first], g[o.triple_second])
        bb = float(np.abs(lhs - rhs).max())
    return ContinuityReport(float(np.abs(mass).max()), f_eq, g_eq, bb)


@dataclass
class W1GeodesicReport:
    w1: float
    checks: list
    max_error: float
    passed: bool


def check_w1_geodesic(c: GeodesicCurve, grid, tol: float = 1e-6) -> W1GeodesicReport:
    """Verify ``W1(f_s, f_t) = |t - s| W1(f0, f1)`` for all grid pairs."""
    g = c.orientation.base
    grid = sorted(float(t) for t in grid)
    total = w1_cost(g, c.f0, c.f1)
    measures = [c.measure(t) for t in grid]
    checks = []
    worst = 0.0
    for i in range(len(grid)):
        for j in range(i + 1, len(grid)):
            got = w1_cost(g, measures[i], measures[j])
            want = (grid[j] - grid[i]) * total
            checks.append((grid[i], grid[j], got, want))
            worst = max(worst, abs(got - want))
    return W1GeodesicReport(total, checks, worst, worst <= tol)


def binomial_pmf(n: int, t: float) -> np.ndarray:
    k = np.arange(n + 1)
    coef = np.array([factorial(n) // (factorial(j) * factorial(n - j)) for j in k], dtype=float)
    return coef * t**k * (1 - t) ** (n - k)


def write_curve_csv(c: GeodesicCurve, grid, path) -> None:
    """CSV with columns ``t, vertex, f``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "vertex", "f"])
        for t in grid:
            for v, val in zip(c.orientation.vertices, c.f(t)):
                w.writerow([repr(float(t)), v, repr(float(val))])
