"""Binomial interpolation along the quadratic-cost coupling on the integer line.

Each coupled pair ``(i, j)`` with ``i <= j`` is spread as ``Bin(j - i, t)``
shifted to start at ``i``; the interpolation is the mixture of these over the
monotone coupling. Functions live on a window ``lo..hi`` covering both
supports: ``f[k - lo]`` at vertex ``k``, ``g[k - lo]`` on the edge
``k -> k+1`` and ``h[k - lo]`` on the triple ``k -> k+1 -> k+2``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Iterable

import numpy as np

from .bbtriple import BBTriple, functional_I
from .entropy import fd_second_derivative, shannon_entropy
from .graphs import path_graph
from .orientation import Orientation
from .transport import Coupling, Measure, w2_monotone_coupling

H_TOL = 1e-10
CONVEX_TOL = 1e-6
FD_STEP = 1e-3


class DominationError(ValueError):
    pass


def _cdfs(f0: Measure, f1: Measure):
    lo = min(min(f0.mass), min(f1.mass))
    hi = max(max(f0.mass), max(f1.mass))
    e0, e1 = f0.exact(), f1.exact()
    c0 = c1 = Fraction(0)
    for k in range(lo, hi + 1):
        c0 += e0.get(k, 0)
        c1 += e1.get(k, 0)
        yield k, c0, c1


def stochastic_domination(f0: Measure, f1: Measure) -> bool:
    """Whether ``F0(k) >= F1(k)`` for every ``k`` (``f1`` sits to the right)."""
    return all(c0 >= c1 for _, c0, c1 in _cdfs(f0, f1))


def bin_pmf(n: int, t: float, m) -> np.ndarray:
    """``C(n, m) t^m (1-t)^(n-m)``, zero outside ``0..n`` (and for ``n < 0``)."""
    m = np.asarray(m)
    out = np.zeros(m.shape, dtype=float)
    if n < 0:
        return out
    ok = (m >= 0) & (m <= n)
    mm = m[ok]
    coef = np.array([comb(n, int(k)) for k in mm], dtype=float)
    out[ok] = coef * t**mm * (1 - t) ** (n - mm)
    return out


@dataclass(frozen=True)
class Window:
    lo: int
    hi: int

    @property
    def size(self) -> int:
        return self.hi - self.lo + 1

    @property
    def ks(self) -> np.ndarray:
        return np.arange(self.lo, self.hi + 1)


def window_of(f0: Measure, f1: Measure) -> Window:
    return Window(min(min(f0.mass), min(f1.mass)), max(max(f0.mass), max(f1.mass)))


@dataclass(frozen=True, eq=False)
class BinomialW2Curve:
    """Binomial/W2 interpolation between ``f0`` and ``f1``."""

    f0: Measure
    f1: Measure
    coupling: Coupling
    window: Window
    dominated: bool

    @classmethod
    def build(cls, f0: Measure, f1: Measure, coupling: Coupling | None = None) -> BinomialW2Curve:
        coupling = coupling or w2_monotone_coupling(f0, f1)
        return cls(f0, f1, coupling, window_of(f0, f1), stochastic_domination(f0, f1))

    @property
    def pairs(self) -> list[tuple[int, int, float]]:
        return [(i, j, float(m)) for (i, j), m in sorted(self.coupling.mass.items())]

    @property
    def forward(self) -> bool:
        """Whether every coupled pair moves rightwards (``i <= j``)."""
        return all(i <= j for i, j, _ in self.pairs)

    def f(self, t: float) -> np.ndarray:
        ks = self.window.ks
        out = np.zeros(len(ks))
        for i, j, m in self.pairs:
            if i <= j:
                out += m * bin_pmf(j - i, t, ks - i)
            else:
                out += m * bin_pmf(i - j, t, i - ks)
        return out

    def _require_forward(self):
        if not self.forward:
            raise DominationError("g and h need a coupling with i <= j on its support")

    def g(self, t: float) -> np.ndarray:
        self._require_forward()
        ks = self.window.ks[:-1]
        out = np.zeros(len(ks))
        for i, j, m in self.pairs:
            n = j - i
            if n >= 1:
                out += m * n * bin_pmf(n - 1, t, ks - i)
        return out

    def h(self, t: float) -> np.ndarray:
        self._require_forward()
        ks = self.window.ks[:-2]
        out = np.zeros(len(ks))
        for i, j, m in self.pairs:
            n = j - i
            if n >= 2:
                out += m * n * (n - 1) * bin_pmf(n - 2, t, ks - i)
        return out

    def g_from_right(self, t: float) -> np.ndarray:
        """``g(k) = sum pi Bin(k - i) (j - k) / (1 - t)``, for ``t < 1``."""
        ks = self.window.ks[:-1]
        out = np.zeros(len(ks))
        for i, j, m in self.pairs:
            out += m * bin_pmf(j - i, t, ks - i) * (j - ks) / (1 - t)
        return out

    def g_from_left(self, t: float) -> np.ndarray:
        """``g(k - 1) = sum pi Bin(k - i) (k - i) / t``, returned indexed by the edge ``k-1 -> k``."""
        ks = self.window.ks[1:]
        out = np.zeros(len(ks))
        for i, j, m in self.pairs:
            out += m * bin_pmf(j - i, t, ks - i) * (ks - i) / t
        return out

    def entropy(self, t: float) -> float:
        return shannon_entropy(self.f(t))

    def chain(self) -> Orientation:
        """The path ``lo -> lo+1 -> ... -> hi`` in local coordinates."""
        n = self.window.size
        return Orientation.from_edges(
            path_graph(n), [(k, k + 1) for k in range(n - 1)], range(n)
        )


def eval_binomial_w2(f0: Measure, f1: Measure, t: float, coupling: Coupling | None = None):
    """``(f_t, g_t, h_t)`` on the window of ``f0`` and ``f1``.

    Raises
    ------
    DominationError
        When ``f0`` is not stochastically dominated by ``f1`` and no
        forward coupling is supplied.
    """
    if not 0 <= t <= 1:
        raise ValueError(f"t = {t} outside [0, 1]")
    c = BinomialW2Curve.build(f0, f1, coupling)
    if coupling is None and not c.dominated:
        raise DominationError("f0 is not stochastically dominated by f1")
    return c.f(t), c.g(t), c.h(t)


def h_tilde(f, g) -> np.ndarray:
    """``g(k) g(k+1) / f(k+1)``: the ``h`` completing ``(f, g)`` to a BB-triple."""
    f = np.asarray(f, float)
    g = np.asarray(g, float)
    mid = f[1:-1]
    num = g[:-1] * g[1:]
    if np.any((mid <= 0) & (num != 0)):
        raise ZeroDivisionError("f vanishes at the middle of a triple with g g > 0")
    return np.where(mid > 0, num / np.where(mid > 0, mid, 1.0), 0.0)


@dataclass
class HComparison:
    t: float
    max_excess: float
    certificate_min: float
    negative_pairs: list

    @property
    def h_le_htilde(self) -> bool:
        return self.max_excess <= H_TOL


def pair_certificate(coupling: Coupling, t: float):
    """Coefficients ``(j2 - j1)(i2 - i1) / (t (1 - t))`` over distinct coupled pairs."""
    pairs = sorted(coupling.mass)
    coef = []
    bad = []
    for a in range(len(pairs)):
        for b in range(a + 1, len(pairs)):
            (i1, j1), (i2, j2) = pairs[a], pairs[b]
            c = (j2 - j1) * (i2 - i1) / (t * (1 - t))
            coef.append(c)
            if c < 0:
                bad.append((pairs[a], pairs[b]))
    return coef, bad


def compare_h(f0: Measure, f1: Measure, t: float, coupling: Coupling | None = None) -> HComparison:
    """Compare ``h_t`` with ``h~_t`` and evaluate the pairwise coefficient certificate."""
    if not 0 < t < 1:
        raise ValueError("t must lie in (0, 1)")
    c = BinomialW2Curve.build(f0, f1, coupling)
    f, g, h = c.f(t), c.g(t), c.h(t)
    excess = float(np.max(h - h_tilde(f, g))) if len(h) else 0.0
    coef, bad = pair_certificate(c.coupling, t)
    return HComparison(t, excess, float(min(coef, default=0.0)), bad)


def bb_gap(curve: BinomialW2Curve, t: float) -> np.ndarray:
    """``g(k) g(k+1) - f(k+1) h(k)``, non-negative under a monotone coupling."""
    f, g, h = curve.f(t), curve.g(t), curve.h(t)
    return g[:-1] * g[1:] - f[1:-1] * h


def log_concavity(f, rtol: float = 1e-12) -> bool:
    """``f(k+1)^2 >= f(k) f(k+2)`` everywhere, with support an interval.

    ``f`` is a :class:`Measure` (checked exactly) or an array over a window.
    """
    if isinstance(f, Measure):
        e = f.exact()
        lo, hi = min(e), max(e)
        vals = [e.get(k, Fraction(0)) for k in range(lo, hi + 1)]
        if any(v == 0 for v in vals):
            return False
        return all(vals[k + 1] ** 2 >= vals[k] * vals[k + 2] for k in range(len(vals) - 2))
    v = np.asarray(f, float)
    nz = np.flatnonzero(v > 0)
    if len(nz) == 0:
        return False
    v = v[nz[0] : nz[-1] + 1]
    if np.any(v <= 0):
        return False
    lhs = v[1:-1] ** 2
    rhs = v[:-2] * v[2:]
    return bool(np.all(lhs >= rhs * (1 - rtol)))


def analytic_hpp(curve: BinomialW2Curve, t: float) -> float:
    """``sum div2 h log f + (div g)^2 / f`` with the interpolation's own ``h``."""
    o = curve.chain()
    return functional_I(BBTriple(o, curve.f(t), curve.g(t), curve.h(t)))


def hpp_lower_term(curve: BinomialW2Curve, t: float) -> float:
    """``sum (h - h~)(k) (log f(k) - 2 log f(k+1) + log f(k+2))``."""
    f, g, h = curve.f(t), curve.g(t), curve.h(t)
    if not len(h):
        return 0.0
    ht = h_tilde(f, g)
    with np.errstate(divide="ignore"):
        lf = np.log(f)
    d2 = lf[:-2] - 2 * lf[1:-1] + lf[2:]
    diff = h - ht
    mask = diff != 0
    return float(np.sum(diff[mask] * d2[mask]))


@dataclass
class ConvexityReport:
    grid: np.ndarray
    H: np.ndarray
    Hpp_fd: np.ndarray
    domination: bool
    log_concave: np.ndarray
    # 1.0 / 0.0 at interior points of a dominated pair, NaN where not evaluated
    h_le_htilde: np.ndarray
    theorem_applies: bool
    min_Hpp_fd: float

    @property
    def convex(self) -> bool:
        return self.min_Hpp_fd >= -CONVEX_TOL

    @property
    def status(self) -> str:
        if not self.theorem_applies:
            return "theorem does not apply"
        return "convex" if self.convex else "convexity violated"

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "H", "Hpp_fd", "domination", "log_concave", "h_le_htilde",
                        "theorem_applies"])
            for i, t in enumerate(self.grid):
                w.writerow([repr(float(t)), repr(float(self.H[i])), repr(float(self.Hpp_fd[i])),
                            int(self.domination), int(bool(self.log_concave[i])),
                            _flag(self.h_le_htilde[i]), int(self.theorem_applies)])


def _flag(x) -> str:
    return "" if np.isnan(x) else str(int(x))


def entropy_convexity_report(f0: Measure, f1: Measure, grid: Iterable[float],
                             fd_step: float = FD_STEP) -> ConvexityReport:
    """Evaluate both hypotheses of the convexity theorem and the entropy along the curve.

    ``theorem_applies`` requires domination and log-concavity at every grid
    point; without it the finite differences are recorded but not judged.
    """
    curve = BinomialW2Curve.build(f0, f1)
    grid = np.asarray(list(grid), float)
    H = np.array([curve.entropy(t) for t in grid])
    fd = np.full(len(grid), np.nan)
    lc = np.zeros(len(grid), dtype=bool)
    hle = np.full(len(grid), np.nan)
    for n, t in enumerate(grid):
        lc[n] = log_concavity(curve.f(t))
        if 2 * fd_step <= t <= 1 - 2 * fd_step:
            fd[n] = fd_second_derivative(curve.entropy, t, fd_step)
        if curve.dominated and 0 < t < 1:
            hle[n] = float(compare_h(f0, f1, t, curve.coupling).h_le_htilde)
    applies = bool(curve.dominated and lc.all())
    finite = fd[np.isfinite(fd)]
    return ConvexityReport(grid, H, fd, curve.dominated, lc, hle, applies,
                           float(finite.min()) if len(finite) else np.inf)
