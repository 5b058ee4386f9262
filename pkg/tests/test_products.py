import csv
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from w1plus.bbtriple import BBTriple, edge_energy, functional_I, random_bb_triple, validate
from w1plus.geodesic import canonical_geodesic, eval_triple
from w1plus.graphs import cayley_graph, hypercube, path_graph, product, product_of
from w1plus.orientation import divergence
from w1plus.products import (
    ProductError,
    canonical_defect,
    check_orientation_decomposition,
    enumerate_squares,
    is_product_measure,
    marginal_measure,
    product_orientation,
    project_triple,
    split_divergence,
    tensorization_check,
)
from w1plus.transport import Measure

half = F(1, 2)


def prod_measure(g, a: dict, b: dict) -> Measure:
    n2 = g.halves[1].n
    return Measure({i * n2 + j: x * y for i, x in a.items() for j, y in b.items()})


def test_grid_corners_decompose():
    g1, g2 = path_graph(3), path_graph(3)
    g = product(g1, g2)
    rep = check_orientation_decomposition(g1, g2, Measure.dirac(g.vertex(0, 0)), Measure.dirac(g.vertex(2, 2)), g)
    assert rep.equal and rep.product_measures
    assert len(rep.direct) == 12


def test_cube_decomposes():
    g1 = g2 = path_graph(2)
    g = product(g1, g2)
    rep = check_orientation_decomposition(g1, g2, Measure.dirac(0), Measure.dirac(3), g)
    assert rep.equal and len(rep.direct) == 4


def test_equal_product_measures_give_empty():
    g1, g2 = path_graph(3), path_graph(2)
    g = product(g1, g2)
    m = prod_measure(g, {0: half, 2: half}, {0: F(1, 3), 1: F(2, 3)})
    rep = check_orientation_decomposition(g1, g2, m, m, g)
    assert rep.direct == set() and rep.composed == set()


def test_correlated_measures_break_decomposition():
    g1 = g2 = path_graph(2)
    g = product(g1, g2)
    f0 = Measure({g.vertex(0, 0): half, g.vertex(1, 1): half})
    f1 = Measure({g.vertex(0, 1): half, g.vertex(1, 0): half})
    rep = check_orientation_decomposition(g1, g2, f0, f1, g)
    assert not rep.product_measures and not rep.equal
    assert rep.missing == {(0, 1), (0, 2), (3, 1), (3, 2)}


@settings(max_examples=40)
@given(st.integers(0, 2**32 - 1))
def test_product_measures_always_decompose(seed):
    rng = np.random.default_rng(seed)
    n1, n2 = int(rng.integers(2, 6)), int(rng.integers(2, 5))
    g1, g2 = path_graph(n1), path_graph(n2)
    g = product(g1, g2)

    def rand(n):
        pts = rng.choice(n, size=int(rng.integers(1, min(n, 3) + 1)), replace=False)
        w = rng.integers(1, 5, size=len(pts))
        return {int(p): F(int(x), int(w.sum())) for p, x in zip(pts, w)}

    f0 = prod_measure(g, rand(n1), rand(n2))
    f1 = prod_measure(g, rand(n1), rand(n2))
    rep = check_orientation_decomposition(g1, g2, f0, f1, g)
    assert rep.product_measures and rep.equal


def test_marginals_and_product_test():
    g = product(path_graph(3), path_graph(2))
    m = prod_measure(g, {0: half, 2: half}, {1: F(1)})
    assert marginal_measure(g, m, 1).exact() == {0: half, 2: half}
    assert marginal_measure(g, m, 2).exact() == {1: F(1)}
    assert is_product_measure(g, m)
    assert not is_product_measure(g, Measure({0: half, 5: half}))


def test_non_product_graph_rejected():
    with pytest.raises(ProductError):
        product_orientation(path_graph(3), Measure.dirac(0), Measure.dirac(2))


def test_split_divergence_examples():
    g = hypercube(2)
    po = product_orientation(g, Measure.dirac(0), Measure.dirac(3))
    o = po.orientation
    d1, d2 = split_divergence(po, np.ones(len(o.edges)))
    assert np.array_equal(d1 + d2, divergence(o, np.ones(len(o.edges))))
    only1 = np.where(po.edge_class == 1, 1.0, 0.0)
    assert np.all(split_divergence(po, only1)[1] == 0)


def test_split_divergence_random():
    g = product(path_graph(4), path_graph(3))
    po = product_orientation(g, Measure.dirac(0), Measure.dirac(g.n - 1))
    rng = np.random.default_rng(1)
    for _ in range(10):
        vals = rng.normal(size=len(po.orientation.edges))
        d1, d2 = split_divergence(po, vals)
        assert np.max(np.abs(d1 + d2 - divergence(po.orientation, vals))) <= 1e-15


def test_edge_classes_total():
    g = product_of(path_graph(3), path_graph(2), path_graph(2))
    po = product_orientation(g, Measure.dirac(0), Measure.dirac(g.n - 1))
    for (x, y), cls in zip(po.orientation.edges, po.edge_class):
        moved = [i for i, (a, b) in enumerate(zip(g.coord(x), g.coord(y))) if a != b]
        assert len(moved) == 1
        assert cls == (1 if moved[0] < po.split_axis else 2)


def test_cube_has_one_square():
    g = hypercube(2)
    rep = enumerate_squares(product_orientation(g, Measure.dirac(0), Measure.dirac(3)))
    assert len(rep.squares) == 1 and rep.consistent


def test_square_counts_on_grid():
    g = product(path_graph(3), path_graph(2))
    po = product_orientation(g, Measure.dirac(g.vertex(0, 0)), Measure.dirac(g.vertex(2, 1)))
    rep = enumerate_squares(po)
    assert rep.consistent
    assert len(rep.squares) == 2
    assert len({(s[0], s[3]) for s in rep.squares}) == len(rep.squares)


def test_chain_times_point_has_no_squares():
    g = product(path_graph(4), path_graph(1))
    rep = enumerate_squares(product_orientation(g, Measure.dirac(0), Measure.dirac(3)))
    assert rep.squares == [] and rep.consistent


def test_projection_of_cube_slice():
    g = hypercube(2)
    c = canonical_geodesic(g, Measure.dirac(0), Measure.dirac(3))
    tr = eval_triple(c, 0.5)
    sl = project_triple(tr, 1, 0)
    assert sl.f == pytest.approx([0.25, 0.25])
    assert len(sl.g) == 1
    e = tr.orientation.edge_index[g.vertex(0, 0), g.vertex(1, 0)]
    assert sl.g[0] == pytest.approx(tr.g[e])


def test_projection_of_empty_slice():
    g = product(path_graph(3), path_graph(3))
    c = canonical_geodesic(g, Measure.dirac(0), Measure.dirac(g.vertex(2, 0)))
    sl = project_triple(eval_triple(c, 0.5), 1, 2)
    assert sl.f.size == 0
    with pytest.raises(ProductError):
        project_triple(eval_triple(c, 0.5), 1, 9)


def test_static_product_slices_have_zero_functional():
    g = product(path_graph(2), path_graph(2))
    m = prod_measure(g, {0: half, 1: half}, {0: half, 1: half})
    c = canonical_geodesic(g, m, m)
    tr = eval_triple(c, 0.4)
    for fixed in (0, 1):
        sl = project_triple(tr, 1, fixed)
        assert np.all(sl.g == 0) and functional_I(sl) == 0


def test_grid_slices_satisfy_bb_equation():
    g = product(path_graph(4), path_graph(3))
    po = product_orientation(g, Measure.dirac(0), Measure.dirac(g.n - 1))
    tr = random_bb_triple(po.orientation, np.random.default_rng(4))
    for axis, n in ((1, 3), (2, 4)):
        for fixed in range(n):
            assert validate(project_triple(tr, axis, fixed), rtol=1e-14).valid


def test_cube_tensorization_is_equality():
    g = hypercube(2)
    c = canonical_geodesic(g, Measure.dirac(0), Measure.dirac(3))
    grid = np.linspace(0, 1, 21)
    rep = tensorization_check(c, grid)
    assert rep.all_satisfied
    t = rep.grid
    assert rep.Hpp == pytest.approx(2 * (1 / t + 1 / (1 - t)))
    assert rep.Hpp == pytest.approx(rep.slice_sum_axis1 + rep.slice_sum_axis2)


def test_three_cube_axis_sums():
    g = hypercube(3)
    c = canonical_geodesic(g, Measure.dirac(0), Measure.dirac(7))
    rep = tensorization_check(c, np.linspace(0.05, 0.95, 10))
    assert rep.all_satisfied
    assert rep.axis_sums.shape == (10, 3)
    assert rep.Hpp == pytest.approx(rep.axis_sums.sum(axis=1))


def test_grid_corner_pair():
    g = product(path_graph(4), path_graph(3))
    c = canonical_geodesic(g, Measure.dirac(0), Measure.dirac(g.n - 1))
    rep = tensorization_check(c, np.linspace(0, 1, 51))
    assert rep.all_satisfied
    assert np.all(rep.slice_sum_axis1 >= -1e-10) and np.all(rep.slice_sum_axis2 >= -1e-10)


@pytest.mark.parametrize("seed", range(6))
def test_random_product_curves(seed):
    rng = np.random.default_rng(seed)
    g = product(path_graph(4), path_graph(3))
    pts = rng.choice(g.n, 4, replace=False)
    f0 = Measure({int(pts[0]): half, int(pts[1]): half})
    f1 = Measure({int(pts[2]): F(1, 3), int(pts[3]): F(2, 3)})
    c = canonical_geodesic(g, f0, f1)
    rep = tensorization_check(c, np.linspace(0, 1, 21))
    assert rep.all_satisfied, rep.margin()


def test_hypercube_edge_energy_chain():
    g = hypercube(3)
    c = canonical_geodesic(g, Measure({0: half, 1: half}), Measure({7: F(1, 4), 6: F(3, 4)}))
    for t in (0.1, 0.5, 0.9):
        tr = eval_triple(c, t)
        ee = edge_energy(tr)
        assert functional_I(tr) >= ee - 1e-8 and ee >= 0


def test_cayley_involutive_bound():
    g = cayley_graph([("Z", 4), ("Zr", 2)])
    f0 = Measure({g.vertex(0, 0): half, g.vertex(1, 1): half})
    f1 = Measure({g.vertex(3, 1): F(7, 10), g.vertex(2, 0): F(3, 10)})
    c = canonical_geodesic(g, f0, f1)
    rep = tensorization_check(c, np.linspace(0, 1, 41))
    assert rep.all_satisfied
    assert np.all(rep.Hpp >= rep.involutive_edge_bound - 1e-8)
    assert np.any(rep.involutive_edge_bound > 0)


def test_non_canonical_curve_rejected():
    g = hypercube(2)
    c = canonical_geodesic(g, Measure.dirac(0), Measure.dirac(3))
    o = c.orientation
    # a hand-built triple whose h depends on the middle vertex
    tr = BBTriple(o, np.full(4, 0.25), np.full(4, 0.5), np.array([1.0, 2.0]))
    assert canonical_defect(tr) == pytest.approx(0.5)
    assert canonical_defect(eval_triple(c, 0.3)) < 1e-12


def test_report_csv(tmp_path):
    g = hypercube(2)
    c = canonical_geodesic(g, Measure.dirac(0), Measure.dirac(3))
    rep = tensorization_check(c, [0.25, 0.5])
    out = tmp_path / "t.csv"
    rep.write_csv(out)
    rows = list(csv.reader(open(out)))
    assert rows[0] == ["t", "Hpp", "slice_sum_axis1", "slice_sum_axis2", "involutive_edge_bound", "satisfied"]
    assert [r[-1] for r in rows[1:]] == ["1", "1"]
