"""Benamou-Brenier triples and the entropy-curvature functional.

A BB-triple ``(f, g, h)`` lives on an :class:`~w1plus.orientation.Orientation`
and satisfies ``f(x1) h(x0 x1 x2) = g(x0 x1) g(x1 x2)`` on every oriented
triple. The functional

    I(f, g, h) = sum_x  div2 h(x) log f(x) + (div g(x))^2 / f(x)

equals the second time derivative of the Shannon entropy along a curve whose
triples satisfy the two continuity equations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .orientation import Orientation, divergence, divergence2

IDENTITY_RTOL = 1e-9
INEQUALITY_SLACK = 1e-8


class BBTripleError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class BBTriple:
    orientation: Orientation
    f: np.ndarray
    g: np.ndarray
    h: np.ndarray

    @classmethod
    def build(cls, o: Orientation, f, g, h=None) -> BBTriple:
        """Assemble from arrays or mappings; ``h`` defaults to ``g g / f``."""
        f = o.vertex_function(f)
        g = o.edge_function(g)
        if h is None:
            h = bb_completion(o, f, g)
        else:
            h = o.triple_function(h)
        return cls(o, f, g, h)


def bb_completion(o: Orientation, f, g) -> np.ndarray:
    """The unique ``h`` making ``(f, g, h)`` a BB-triple."""
    if not o.triples:
        return np.zeros(0)
    mid = o.triple_vertex(1)
    return g[o.triple_first] * g[o.triple_second] / f[mid]


@dataclass
class ValidationReport:
    max_relative_violation: float
    nonpositive_f: list
    nonpositive_g: list
    negative_h: list
    normalization_defect: float
    valid: bool

    def __str__(self) -> str:
        state = "valid" if self.valid else "invalid"
        return (
            f"BB-triple {state}: max relative violation {self.max_relative_violation:.3e}, "
            f"normalization defect {self.normalization_defect:.3e}"
        )


def validate(t: BBTriple, rtol: float = IDENTITY_RTOL) -> ValidationReport:
    """Check the BB equation, positivity and normalization of a triple."""
    o = t.orientation
    viol = 0.0
    if o.triples:
        lhs = t.f[o.triple_vertex(1)] * t.h
        rhs = t.g[o.triple_first] * t.g[o.triple_second]
        scale = np.where(rhs != 0, np.abs(rhs), np.maximum(np.abs(lhs), 1e-300))
        viol = float(np.max(np.abs(lhs - rhs) / scale))
    bad_f = [o.vertices[i] for i in np.flatnonzero(t.f <= 0)]
    bad_g = [o.edges[i] for i in np.flatnonzero(t.g <= 0)]
    bad_h = [o.triples[i] for i in np.flatnonzero(t.h < 0)]
    defect = abs(float(np.sum(t.f)) - 1.0)
    ok = viol <= rtol and not bad_f and not bad_g and not bad_h
    return ValidationReport(viol, bad_f, bad_g, bad_h, defect, ok)


def _log_f_terms(f, coeff, what):
    # 0 log 0 = 0 where the coefficient vanishes
    zero = f <= 0
    if np.any(zero & (coeff != 0)):
        raise BBTripleError(f"f vanishes where {what} is nonzero")
    logf = np.log(np.where(zero, 1.0, f))
    return coeff * logf


def _fisher_term(f, divg):
    zero = f <= 0
    if np.any(zero & (divg != 0)):
        raise BBTripleError("f vanishes where the divergence of g is nonzero")
    return np.where(zero, 0.0, divg**2 / np.where(zero, 1.0, f))


def functional_I(t: BBTriple) -> float:
    o = t.orientation
    d2h = divergence2(o, t.h) if o.triples else np.zeros(len(o.vertices))
    dg = divergence(o, t.g)
    return float(np.sum(_log_f_terms(t.f, d2h, "div2 h")) + np.sum(_fisher_term(t.f, dg)))


def functional_I_ibp(t: BBTriple) -> float:
    """``I`` after integration by parts.

    Each oriented triple ``(x0 x1 x2)`` contributes
    ``h log(f(x0) h / g(x0 x1)^2) + h log(f(x2) h / g(x1 x2)^2)``.
    """
    o = t.orientation
    total = float(np.sum(_fisher_term(t.f, divergence(o, t.g))))
    if not o.triples:
        return total
    h = t.h
    g01 = t.g[o.triple_first]
    g12 = t.g[o.triple_second]
    f0 = t.f[o.triple_vertex(0)]
    f2 = t.f[o.triple_vertex(2)]
    pos = h > 0
    if np.any(~pos & (h != 0)):
        raise BBTripleError("negative h")
    hp = h[pos]
    terms = hp * (
        np.log(f0[pos] * hp / g01[pos] ** 2) + np.log(f2[pos] * hp / g12[pos] ** 2)
    )
    return total + float(np.sum(terms))


def lower_bound_general(t: BBTriple) -> float:
    """``sum_E g^2/f(x0) (1 - |F(x1)|) + g^2/f(x1) (1 - |E(x0)|)``."""
    o = t.orientation
    if not o.edges:
        return 0.0
    g2 = t.g**2
    a = g2 / t.f[o.tail] * (1 - o.out_degree[o.head])
    b = g2 / t.f[o.head] * (1 - o.in_degree[o.tail])
    return float(np.sum(a + b))


def edge_energy(t: BBTriple, mask=None) -> float:
    """``sum g^2 (1/f(x0) + 1/f(x1))`` over (a subset of) oriented edges."""
    o = t.orientation
    if not o.edges:
        return 0.0
    terms = t.g**2 * (1 / t.f[o.tail] + 1 / t.f[o.head])
    if mask is not None:
        terms = terms[np.asarray(mask, dtype=bool)]
    return float(np.sum(terms))


@dataclass
class BoundReport:
    I: float
    bound: float
    satisfied: bool


def check_I_bound(t: BBTriple, slack: float = INEQUALITY_SLACK) -> BoundReport:
    val = functional_I(t)
    bound = lower_bound_general(t)
    return BoundReport(val, bound, val >= bound - slack * max(1.0, abs(val)))


def random_bb_triple(o: Orientation, rng: np.random.Generator, normalize: bool = True) -> BBTriple:
    """Random positive ``f``, ``g`` on ``o`` with ``h`` from the BB equation."""
    f = rng.uniform(0.05, 1.0, len(o.vertices))
    if normalize:
        f /= f.sum()
    g = rng.uniform(0.05, 1.0, len(o.edges)) * rng.choice([0.1, 1.0, 3.0])
    return BBTriple.build(o, f, g)
