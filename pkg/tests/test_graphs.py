import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import all_walks_geodesics, bfs_dist
from w1plus.graphs import (
    GraphError,
    build_graph,
    cayley_graph,
    complete_graph,
    count_geodesics,
    cycle_graph,
    enumerate_geodesics,
    from_edges,
    hypercube,
    path_graph,
    product,
    product_of,
    read_edge_list,
)


def test_path_4():
    g = build_graph("path 4")
    assert g.n == 4 and len(g.edges) == 3 and g.dist[0, 3] == 3


def test_hypercube_2():
    g = build_graph("hypercube 2")
    assert g.n == 4 and len(g.edges) == 4
    assert g.dist[g.vertex(0, 0), g.vertex(1, 1)] == 2


def test_complete_3():
    g = build_graph({"family": "complete", "n": 3})
    d = g.dist
    assert all(d[x, y] == 1 for x in range(3) for y in range(3) if x != y)


@pytest.mark.parametrize(
    "bad",
    [
        [(0, 1), (2, 3)],  # disconnected
        [(0, 0)],
        [],
    ],
)
def test_from_edges_rejects(bad):
    with pytest.raises(GraphError):
        from_edges(bad)


def test_cycle_needs_three():
    with pytest.raises(GraphError):
        cycle_graph(2)
    with pytest.raises(GraphError):
        build_graph("cycle 2")


def test_edge_list_file(tmp_path):
    p = tmp_path / "g.txt"
    p.write_text("# square\n0 1\n1 2\n\n2 3\n3 0  # closing edge\n")
    g = read_edge_list(p)
    assert g.n == 4 and g.dist[0, 2] == 2
    assert build_graph(f"file:{p}").n == 4


def test_edge_list_disconnected(tmp_path):
    p = tmp_path / "g.txt"
    p.write_text("0 1\n5 6\n")
    with pytest.raises(GraphError):
        read_edge_list(p)


def test_sparse_labels_relabelled():
    g = from_edges([(10, 20), (20, 30)])
    assert g.n == 3 and g.dist[0, 2] == 2


def test_metric_axioms_on_builtins():
    for g in [path_graph(5), cycle_graph(6), complete_graph(4), hypercube(3),
              product(path_graph(3), cycle_graph(4))]:
        d = g.dist.astype(int)
        assert (d == d.T).all()
        assert (np.diag(d) == 0).all() and (d + np.eye(g.n, dtype=int) > 0).all()
        for u in range(g.n):
            for v in range(g.n):
                assert (d[u, v] == 1) == g.is_edge(u, v)
        assert (d[:, :, None] <= d[:, None, :] + d.T[None, :, :]).all()


def test_distances_match_independent_bfs():
    g = product(cycle_graph(5), path_graph(3))
    d, _ = bfs_dist(g.n, g.edges)
    assert (d == g.dist).all()


def test_geodesic_counts_examples():
    assert len(enumerate_geodesics(path_graph(4), 0, 3)) == 1
    h = hypercube(2)
    assert len(enumerate_geodesics(h, h.vertex(0, 0), h.vertex(1, 1))) == 2
    grid = product(path_graph(3), path_graph(2))
    assert len(enumerate_geodesics(grid, grid.vertex(0, 0), grid.vertex(2, 1))) == 3
    assert count_geodesics(grid, grid.vertex(0, 0), grid.vertex(2, 1)) == 3


def test_trivial_geodesic():
    g = path_graph(3)
    assert enumerate_geodesics(g, 1, 1) == [(1,)]


def test_geodesic_limit():
    g = hypercube(4)
    with pytest.raises(GraphError):
        enumerate_geodesics(g, 0, 15, limit=5)


SMALL = [path_graph(5), cycle_graph(6), complete_graph(4), hypercube(3),
         product(path_graph(3), path_graph(3)), product(cycle_graph(3), path_graph(2)),
         from_edges([(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 5), (5, 2)])]


@pytest.mark.parametrize("g", SMALL, ids=lambda g: g.name or "custom")
def test_enumeration_matches_brute_force(g):
    assert g.n <= 12
    for x in range(g.n):
        for y in range(g.n):
            got = set(enumerate_geodesics(g, x, y))
            assert got == all_walks_geodesics(g.n, g.edges, x, y)
            assert all(g.is_geodesic(c) for c in got)
            assert count_geodesics(g, x, y) == len(got)


def test_product_of_two_edges_is_square():
    g = product(path_graph(2), path_graph(2))
    assert g.n == 4 and len(g.edges) == 4
    assert sorted(np.bincount(np.array(list(g.edges)).ravel())) == [2, 2, 2, 2]


def test_product_distance_is_sum():
    g1, g2 = path_graph(5), cycle_graph(4)
    g = product(g1, g2)
    rng = np.random.default_rng(0)
    for _ in range(100):
        a, b, c, d = rng.integers(5), rng.integers(4), rng.integers(5), rng.integers(4)
        assert g.dist[g.vertex(a, b), g.vertex(c, d)] == g1.dist[a, c] + g2.dist[b, d]


def test_product_geodesic_count_binomial():
    g = product(path_graph(4), path_graph(3))
    assert count_geodesics(g, g.vertex(0, 0), g.vertex(3, 2)) == 10


@given(st.integers(2, 4), st.integers(2, 4), st.data())
def test_product_geodesics_project_monotonically(n1, n2, data):
    g1, g2 = path_graph(n1), cycle_graph(3) if n2 == 3 else path_graph(n2)
    g = product(g1, g2)
    x = data.draw(st.integers(0, g.n - 1))
    y = data.draw(st.integers(0, g.n - 1))
    for geo in enumerate_geodesics(g, x, y):
        coords = [g.coord(v) for v in geo]
        phi = [0]
        for a, b in zip(coords[:-1], coords[1:]):
            step = int(a[0] != b[0])
            assert step + int(a[1] != b[1]) == 1
            phi.append(phi[-1] + step)
        proj1 = [c[0] for i, c in enumerate(coords) if i == 0 or phi[i] != phi[i - 1]]
        proj2 = [c[1] for i, c in enumerate(coords) if i == 0 or phi[i] == phi[i - 1]]
        assert g1.is_geodesic(proj1) and g2.is_geodesic(proj2)


def test_cayley_marks_involutions():
    g = cayley_graph([("Z", 4), ("Zr", 2)])
    assert g.n == 8
    assert len(g.involutive_edges) == 4
    for u, v in g.involutive_edges:
        assert g.edge_axis(u, v) == 1
    h = cayley_graph([("Zr", 3), ("Zr", 2), ("Zr", 2)])
    assert len(h.involutive_edges) == 2 * 3 * 2


def test_nested_products_keep_flat_coordinates():
    g = product_of(path_graph(2), path_graph(3), path_graph(2))
    assert g.sizes == (2, 3, 2)
    v = g.vertex(1, 2, 0)
    assert g.coord(v) == (1, 2, 0)
    assert g.halves[0].sizes == (2, 3)


def test_build_graph_structured_specs():
    assert build_graph({"product": ["path 2", "path 2", "path 2"]}).n == 8
    assert build_graph({"cayley": [["Z", 3], ["Zr", 2]]}).n == 6
    assert build_graph({"edges": [[0, 1], [1, 2]]}).n == 3
    with pytest.raises(GraphError):
        build_graph("torus 3")
