"""Entropy functionals along curves and the auxiliary inequalities for Renyi entropies."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .bbtriple import BBTriple, functional_I, lower_bound_general
from .geodesic import GeodesicCurve, eval_triple
from .orientation import divergence2
from .transport import Measure

FD_STEP = 1e-3
CONVEX_TOL = 1e-8


def _values(f) -> np.ndarray:
    if isinstance(f, Measure):
        return np.array([float(m) for m in f.mass.values()])
    return np.asarray(f, dtype=float)


def shannon_entropy(f) -> float:
    """``sum f log f`` with ``0 log 0 = 0``."""
    v = _values(f)
    v = v[v > 0]
    return float(np.sum(v * np.log(v)))


def renyi_entropy(f, p: float) -> float:
    """``-sum f^p`` for ``0 < p < 1``."""
    if not 0 < p < 1:
        raise ValueError("Renyi order must lie in (0, 1)")
    v = np.clip(_values(f), 0.0, None)
    return float(-np.sum(v**p))


def relative_entropy(f, nu) -> float:
    """``sum f log(f / nu)``; ``nu`` must charge every atom of ``f``."""
    if isinstance(f, Measure):
        fm = {x: float(m) for x, m in f.mass.items()}
    else:
        fm = {i: float(m) for i, m in enumerate(np.asarray(f)) if m > 0}
    if isinstance(nu, Measure):
        num = {x: float(m) for x, m in nu.mass.items()}
    else:
        num = {i: float(m) for i, m in enumerate(np.asarray(nu))}
    total = 0.0
    for x, m in fm.items():
        if m <= 0:
            continue
        ref = num.get(x, 0.0)
        if ref <= 0:
            raise ValueError(f"reference measure vanishes at {x} in supp(f)")
        total += m * np.log(m / ref)
    return float(total)


def second_difference(values, step: float) -> np.ndarray:
    v = np.asarray(values)
    return (v[:-2] - 2 * v[1:-1] + v[2:]) / step**2


def fd_second_derivative(func, t: float, step: float = FD_STEP) -> float:
    """Fourth-order central difference for the second derivative at ``t``.

    Needs ``t - 2 step`` and ``t + 2 step`` in the domain. The three-point
    stencil has truncation error ``step**2 * H4 / 12``; for an entropy whose
    atoms grow like ``t`` this is ``step**2 / (6 t**2)`` relative to the
    second derivative, above 1e-4 for ``t < 0.04`` at ``step = 1e-3``.
    """
    h = step
    vals = [func(t + k * h) for k in (-2, -1, 0, 1, 2)]
    return (-vals[0] + 16 * vals[1] - 30 * vals[2] + 16 * vals[3] - vals[4]) / (12 * h * h)


def _curve_entropy(c: GeodesicCurve, t: float) -> float:
    return shannon_entropy(np.clip(c.f(t), 0.0, None))


@dataclass
class EntropyCurveReport:
    grid: np.ndarray
    H: np.ndarray
    Hpp_analytic: np.ndarray
    Hpp_fd: np.ndarray
    lower_bound: np.ndarray
    w_squared: np.ndarray
    renyi: dict = field(default_factory=dict)
    renyi_second_diff: dict = field(default_factory=dict)
    min_Hpp: float = np.inf
    convex: bool = True

    def fd_mismatch(self, lo: float = 2e-3) -> float:
        """Largest ``|I - FD2 H| / max(1, |I|)`` away from the endpoints."""
        mask = (self.grid >= lo) & (self.grid <= 1 - lo)
        if not mask.any():
            return 0.0
        a, b = self.Hpp_analytic[mask], self.Hpp_fd[mask]
        return float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(a))))

    def write_csv(self, path) -> None:
        orders = sorted(self.renyi)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(
                ["t", "H", "Hpp_analytic", "Hpp_fd", "lower_bound_general", "w_squared"]
                + [f"renyi_{p}" for p in orders]
            )
            for i, t in enumerate(self.grid):
                row = [t, self.H[i], self.Hpp_analytic[i], self.Hpp_fd[i],
                       self.lower_bound[i], self.w_squared[i]]
                row += [self.renyi[p][i] for p in orders]
                w.writerow([repr(float(x)) for x in row])


def entropy_along_curve(
    c: GeodesicCurve,
    grid,
    p_values=(),
    fd_step: float = FD_STEP,
    refine: int = 4,
) -> EntropyCurveReport:
    """Entropy, its second derivative (analytic and finite-difference) along ``c``.

    Finite differences (five-point central stencil) are only formed at grid
    points at least ``2 * fd_step`` from the endpoints; elsewhere ``Hpp_fd``
    is NaN. The convexity verdict
    uses the analytic value on a grid refined ``refine`` times.
    """
    grid = np.asarray(grid, dtype=float)
    H = np.array([_curve_entropy(c, t) for t in grid])
    ana = np.full(len(grid), np.nan)
    fd = np.full(len(grid), np.nan)
    lb = np.full(len(grid), np.nan)
    w2 = np.full(len(grid), np.nan)
    for i, t in enumerate(grid):
        if 0 < t < 1:
            tr = eval_triple(c, t)
            ana[i] = functional_I(tr)
            lb[i] = lower_bound_general(tr)
            w2[i] = w_squared(tr)
        if 2 * fd_step <= t <= 1 - 2 * fd_step:
            fd[i] = fd_second_derivative(lambda s: _curve_entropy(c, s), t, fd_step)
    renyi = {}
    rdiff = {}
    for p in p_values:
        vals = np.array([renyi_entropy(c.f(t), p) for t in grid])
        renyi[p] = vals
        rdiff[p] = vals[:-2] - 2 * vals[1:-1] + vals[2:]
    fine = np.linspace(grid.min(), grid.max(), refine * (len(grid) - 1) + 1)
    fine = fine[(fine > 0) & (fine < 1)]
    fine_vals = [functional_I(eval_triple(c, t)) for t in fine]
    min_hpp = float(min(fine_vals, default=np.inf))
    return EntropyCurveReport(
        grid, H, ana, fd, lb, w2, renyi, rdiff, min_hpp, min_hpp >= -CONVEX_TOL
    )


def w_squared(tr: BBTriple) -> float:
    """Sum of ``h`` over oriented triples."""
    return float(np.sum(tr.h))


def velocity_fields(tr: BBTriple) -> tuple[np.ndarray, np.ndarray]:
    """Forward and backward velocities ``V+ = sum_F g / f``, ``V- = sum_E g / f``."""
    o = tr.orientation
    n = len(o.vertices)
    out = np.zeros(n)
    inn = np.zeros(n)
    np.add.at(out, o.tail, tr.g)
    np.add.at(inn, o.head, tr.g)
    with np.errstate(divide="ignore", invalid="ignore"):
        vp = np.where(tr.f > 0, out / tr.f, 0.0)
        vm = np.where(tr.f > 0, inn / tr.f, 0.0)
    return vp, vm


@dataclass(frozen=True)
class Potential:
    """Potential ``V`` of the reference measure ``exp(-V)`` with convexity constant ``K``."""

    V: dict
    K: float

    def array(self, vertices) -> np.ndarray:
        return np.array([float(self.V[v]) for v in vertices])


class PotentialError(ValueError):
    def __init__(self, offending):
        super().__init__(f"potential not K-convex on {len(offending)} triple(s): {offending[:5]}")
        self.offending = offending


def convexity_defects(pot: Potential, o) -> list:
    V = pot.V
    return [t for t in o.triples if V[t[0]] - 2 * V[t[1]] + V[t[2]] < pot.K - 1e-12]


@dataclass
class RelativeEntropyReport:
    grid: np.ndarray
    Hpp: np.ndarray
    Hnu_pp: np.ndarray
    w_squared: float
    margin: np.ndarray
    satisfied: bool


def relative_entropy_bound(c: GeodesicCurve, pot: Potential, grid, slack: float = 1e-8):
    """Check ``H_nu'' >= H'' + K W^2`` at interior grid points."""
    o = c.orientation
    bad = convexity_defects(pot, o)
    if bad:
        raise PotentialError(bad)
    V = pot.array(o.vertices)
    ts = np.array([t for t in np.asarray(grid, float) if 0 < t < 1])
    hpp = np.empty(len(ts))
    hnu = np.empty(len(ts))
    w2 = np.empty(len(ts))
    for i, t in enumerate(ts):
        tr = eval_triple(c, t)
        hpp[i] = functional_I(tr)
        extra = float(divergence2(o, tr.h) @ V) if o.triples else 0.0
        hnu[i] = hpp[i] + extra
        w2[i] = w_squared(tr)
    wsq = float(np.mean(w2)) if len(w2) else 0.0
    margin = hnu - (hpp + pot.K * w2)
    return RelativeEntropyReport(ts, hpp, hnu, wsq, margin, bool(np.all(margin >= -slack)))


def relative_entropy_curve(c: GeodesicCurve, pot: Potential, t: float) -> float:
    """``H_nu(f_t)`` for ``nu = exp(-V)`` (not necessarily normalized)."""
    f = np.clip(c.f(t), 0.0, None)
    V = pot.array(c.orientation.vertices)
    return shannon_entropy(f) + float(f @ V)


def _order(p):
    p = np.asarray(p, dtype=float)
    if np.any((p <= 0) | (p >= 1)):
        raise ValueError("p must lie in (0, 1)")
    return p


def psi(x, p: float):
    """Auxiliary function whose non-negativity drives Renyi convexity on Z."""
    p = _order(p)
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("psi is defined for x >= 0")
    return (
        (1 - p) * (x - 1) ** 2
        - (x**p - 1) / (2 - p)
        - x ** (2 - p) / (2 - p)
        - (1 - p) * x**2 / (2 - p)
        + 2 * x
        - 1
    )


def holder_gap(f, g, h, p: float):
    """RHS minus LHS of ``h f^(p-1) <= h^(2-p) g^(2p-2)/(2-p) + (1-p) g^2 f^(p-2)/(2-p)``."""
    p = _order(p)
    f, g, h = (np.asarray(a, dtype=float) for a in (f, g, h))
    if np.any(f <= 0) or np.any(g <= 0) or np.any(h < 0):
        raise ValueError("holder_gap needs f, g > 0 and h >= 0")
    lhs = h * f ** (p - 1)
    rhs = h ** (2 - p) * g ** (2 * p - 2) / (2 - p) + (1 - p) * g**2 * f ** (p - 2) / (2 - p)
    return rhs - lhs
