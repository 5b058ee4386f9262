"""
Tensorization on products
=========================

On a product graph the curvature functional dominates the sum of the
functionals of its one-dimensional slices. On the cube with corner-to-corner
Diracs both sides agree; on a grid with spread-out measures there is slack.
"""

from fractions import Fraction

import numpy as np

from w1plus import Measure, canonical_geodesic, hypercube, path_graph, product
from w1plus.graphs import cayley_graph
from w1plus.products import enumerate_squares, product_orientation, tensorization_check

grid = np.linspace(0, 1, 11)

cube = hypercube(3)
rep = tensorization_check(canonical_geodesic(cube, Measure.dirac(0), Measure.dirac(7)), grid)
print("3-cube, corner to corner")
for t, hpp, axes in zip(rep.grid, rep.Hpp, rep.axis_sums):
    print(f"  t={t:.1f}  H''={hpp:8.4f}  per-axis={np.round(axes, 4)}")

g = product(path_graph(4), path_graph(3))
f0 = Measure({g.vertex(0, 0): Fraction(1, 2), g.vertex(1, 2): Fraction(1, 2)})
f1 = Measure({g.vertex(3, 0): Fraction(1, 3), g.vertex(3, 2): Fraction(2, 3)})
po = product_orientation(g, f0, f1)
sq = enumerate_squares(po)
print(f"\n{g.name}: {len(po.orientation.edges)} oriented edges, {len(sq.squares)} oriented squares")
rep = tensorization_check(canonical_geodesic(g, f0, f1), grid)
print("  smallest H'' - slice sum:", f"{rep.margin():.3e}")

# Z x Z_2: the Z_2 generator is an involution, its edges give a direct bound
cay = cayley_graph([("Z", 4), ("Zr", 2)])
f0 = Measure({cay.vertex(0, 0): Fraction(1, 2), cay.vertex(1, 1): Fraction(1, 2)})
f1 = Measure({cay.vertex(3, 1): Fraction(7, 10), cay.vertex(2, 0): Fraction(3, 10)})
rep = tensorization_check(canonical_geodesic(cay, f0, f1), grid)
print(f"\n{cay.name}")
for t, hpp, inv in zip(rep.grid[::3], rep.Hpp[::3], rep.involutive_edge_bound[::3]):
    print(f"  t={t:.1f}  H''={hpp:8.4f}  involutive-edge bound={inv:8.4f}")
