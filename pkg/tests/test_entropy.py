import csv
from fractions import Fraction as F
from math import log, sqrt

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import binomial, entropy
from w1plus.bbtriple import random_bb_triple
from w1plus.entropy import (
    Potential,
    PotentialError,
    entropy_along_curve,
    fd_second_derivative,
    holder_gap,
    psi,
    relative_entropy,
    relative_entropy_bound,
    relative_entropy_curve,
    renyi_entropy,
    shannon_entropy,
    velocity_fields,
    w_squared,
)
from w1plus.geodesic import canonical_geodesic, eval_triple
from w1plus.graphs import hypercube, path_graph, product
from w1plus.orientation import orient
from w1plus.transport import Measure

half = F(1, 2)


def test_shannon_values():
    assert shannon_entropy(Measure.dirac(0)) == 0.0
    assert shannon_entropy([0.5, 0.5]) == pytest.approx(-log(2))
    assert shannon_entropy([0.25, 0.5, 0.25]) == pytest.approx(-1.5 * log(2))
    assert shannon_entropy([0.0, 1.0]) == 0.0


def test_renyi_values():
    assert renyi_entropy(Measure.dirac(3), 0.3) == pytest.approx(-1)
    assert renyi_entropy([0.5, 0.5], 0.5) == pytest.approx(-sqrt(2))
    f = [0.25, 0.5, 0.25]
    p = 0.999
    assert (renyi_entropy(f, p) + 1) / (1 - p) == pytest.approx(shannon_entropy(f), abs=1e-2)
    for bad in (0, 1, 1.5):
        with pytest.raises(ValueError):
            renyi_entropy(f, bad)


def test_relative_entropy_values():
    nu = Measure({0: F(1, 4), 1: F(1, 4), 2: F(1, 4), 3: F(1, 4)})
    assert relative_entropy(nu, nu) == pytest.approx(0)
    assert relative_entropy(Measure.dirac(0), nu) == pytest.approx(log(4))
    with pytest.raises(ValueError):
        relative_entropy(Measure.dirac(7), nu)


@given(st.lists(st.floats(0.01, 1.0), min_size=2, max_size=8))
def test_uniform_reference_shift(w):
    f = np.array(w) / sum(w)
    nu = np.full(len(f), 1 / len(f))
    assert abs(relative_entropy(f, nu) - shannon_entropy(f) - log(len(f))) < 1e-12


def test_fd_stencil_exact_on_quartic():
    assert fd_second_derivative(lambda t: t**4, 0.5) == pytest.approx(12 * 0.25, rel=1e-9)


def test_bernoulli_curvature():
    c = canonical_geodesic(path_graph(2), Measure.dirac(0), Measure.dirac(1))
    grid = np.linspace(0, 1, 21)
    rep = entropy_along_curve(c, grid)
    i = 10
    assert rep.Hpp_analytic[i] == pytest.approx(4.0)
    inner = (grid > 0) & (grid < 1)
    assert rep.Hpp_analytic[inner] == pytest.approx(1 / grid[inner] + 1 / (1 - grid[inner]))
    assert np.isnan(rep.Hpp_fd[0]) and np.isnan(rep.Hpp_analytic[0])


@pytest.mark.parametrize("n", [2, 3, 6])
def test_binomial_entropy_matches_oracle(n):
    c = canonical_geodesic(path_graph(n + 1), Measure.dirac(0), Measure.dirac(n))
    grid = np.linspace(0, 1, 101)
    rep = entropy_along_curve(c, grid, p_values=(0.25, 0.5, 0.75))
    assert rep.H == pytest.approx([entropy(binomial(n, t)) for t in grid], abs=1e-12)
    assert rep.convex and rep.min_Hpp > 0
    assert rep.fd_mismatch() <= 1e-4
    for p in (0.25, 0.5, 0.75):
        assert rep.renyi_second_diff[p].min() >= -1e-6


def test_fd_mismatch_on_cube_and_products():
    for g, a, b in [(hypercube(3), 0, 7), (product(path_graph(3), path_graph(4)), 0, 11)]:
        c = canonical_geodesic(g, Measure({a: half, 1: half}), Measure.dirac(b))
        rep = entropy_along_curve(c, np.linspace(0.01, 0.99, 25))
        assert rep.fd_mismatch() <= 1e-4


def test_report_csv(tmp_path):
    c = canonical_geodesic(path_graph(3), Measure.dirac(0), Measure.dirac(2))
    rep = entropy_along_curve(c, [0.25, 0.5, 0.75], p_values=(0.5,))
    out = tmp_path / "e.csv"
    rep.write_csv(out)
    rows = list(csv.reader(open(out)))
    assert rows[0] == ["t", "H", "Hpp_analytic", "Hpp_fd", "lower_bound_general", "w_squared", "renyi_0.5"]
    assert len(rows) == 4
    assert float(rows[2][5]) == pytest.approx(2.0)


def test_w_squared_examples():
    c = canonical_geodesic(path_graph(3), Measure.dirac(0), Measure.dirac(2))
    for t in (0.1, 0.5, 0.9):
        assert w_squared(eval_triple(c, t)) == pytest.approx(2.0)
    adj = canonical_geodesic(path_graph(2), Measure.dirac(0), Measure.dirac(1))
    assert w_squared(eval_triple(adj, 0.4)) == 0.0


@pytest.mark.parametrize("seed", range(5))
def test_w_squared_constant_and_cross_identity(seed):
    rng = np.random.default_rng(seed)
    g = product(path_graph(4), path_graph(3))
    pts0 = rng.choice(g.n, 2, replace=False)
    pts1 = rng.choice(g.n, 2, replace=False)
    c = canonical_geodesic(g, Measure({int(pts0[0]): half, int(pts0[1]): half}),
                           Measure({int(pts1[0]): F(1, 3), int(pts1[1]): F(2, 3)}))
    grid = np.linspace(0, 1, 101)[1:-1]
    vals = np.array([w_squared(eval_triple(c, t)) for t in grid])
    assert vals.std() < 1e-8
    for t in (0.2, 0.7):
        tr = eval_triple(c, t)
        vp, vm = velocity_fields(tr)
        assert np.sum(tr.f * vp * vm) == pytest.approx(w_squared(tr), rel=1e-9, abs=1e-12)


def test_cross_identity_on_random_triples():
    o = orient(hypercube(3), Measure.dirac(0), Measure.dirac(7))
    rng = np.random.default_rng(2)
    for _ in range(50):
        tr = random_bb_triple(o, rng)
        vp, vm = velocity_fields(tr)
        assert np.sum(tr.f * vp * vm) == pytest.approx(w_squared(tr), rel=1e-9)


def _chain_curve(a, b, n):
    return canonical_geodesic(path_graph(n), Measure.dirac(a), Measure.dirac(b))


def test_zero_potential_is_equality():
    c = _chain_curve(0, 3, 4)
    rep = relative_entropy_bound(c, Potential({k: 0.0 for k in range(4)}, 0.0), np.linspace(0, 1, 11))
    assert rep.Hnu_pp == pytest.approx(rep.Hpp) and rep.satisfied


def test_quadratic_potential():
    c = _chain_curve(0, 2, 5)
    rep = relative_entropy_bound(c, Potential({k: float(k * k) for k in range(5)}, 2.0), np.linspace(0, 1, 21))
    assert rep.satisfied and rep.w_squared == pytest.approx(2.0)
    # the bound is an equality when V is exactly K-convex
    assert np.abs(rep.margin).max() < 1e-9


def test_abs_potential():
    g = path_graph(7)
    c = canonical_geodesic(g, Measure({0: half, 2: half}), Measure({4: half, 6: half}))
    V = {k: float(abs(k - 3)) for k in range(7)}
    rep = relative_entropy_bound(c, Potential(V, 0.0), np.linspace(0, 1, 21))
    assert rep.satisfied and rep.margin.min() >= -1e-8


def test_relative_entropy_second_derivative_by_fd():
    c = _chain_curve(0, 3, 4)
    pot = Potential({k: float(k * k) for k in range(4)}, 2.0)
    rep = relative_entropy_bound(c, pot, [0.3, 0.6])
    for t, val in zip(rep.grid, rep.Hnu_pp):
        fd = fd_second_derivative(lambda s: relative_entropy_curve(c, pot, s), t)
        assert fd == pytest.approx(val, rel=1e-5)


def test_nonconvex_potential_rejected():
    c = _chain_curve(0, 2, 3)
    with pytest.raises(PotentialError) as err:
        relative_entropy_bound(c, Potential({0: 0.0, 1: 1.0, 2: 0.0}, 0.0), [0.5])
    assert err.value.offending == [(0, 1, 2)]


def test_psi_examples():
    for p in np.linspace(0.1, 0.9, 9):
        assert psi(1.0, p) == pytest.approx(0, abs=1e-15)
        assert holder_gap(1.0, 1.0, 1.0, p) == pytest.approx(0, abs=1e-15)
    x = np.arange(0, 10 + 1e-9, 1e-3)
    for p in np.linspace(0.1, 0.9, 9):
        assert psi(x, p).min() >= -1e-12


def test_psi_domain():
    with pytest.raises(ValueError):
        psi(-1.0, 0.5)
    with pytest.raises(ValueError):
        psi(1.0, 1.0)
    with pytest.raises(ValueError):
        holder_gap(0.0, 1.0, 1.0, 0.5)


@settings(max_examples=300)
@given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3), st.floats(0, 1e3), st.floats(0.01, 0.99))
def test_holder_gap_nonnegative(f, g, h, p):
    gap = holder_gap(f, g, h, p)
    scale = max(1.0, h * f ** (p - 1))
    assert gap >= -1e-12 * scale


def test_holder_gap_vectorized():
    rng = np.random.default_rng(0)
    n = 10**5
    f, g, h = rng.uniform(0.01, 5, (3, n))
    p = rng.uniform(0.01, 0.99, n)
    assert holder_gap(f, g, h, p).min() >= -1e-12
