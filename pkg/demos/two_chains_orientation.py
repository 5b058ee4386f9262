"""
Orientation of two disjoint transports
======================================

Half the mass goes 0 -> 1 and half goes 2 -> 3. The edge between 1 and 2 lies
on no optimal transport path, so it stays unoriented and the curve splits
into two independent Bernoulli pieces.
"""

from fractions import Fraction

from w1plus import Measure, orient, path_counts, path_graph
from w1plus.geodesic import canonical_geodesic
from w1plus.orientation import dump_orientation

half = Fraction(1, 2)
g = path_graph(4)
f0 = Measure({0: half, 2: half})
f1 = Measure({1: half, 3: half})

o = orient(g, f0, f1)
print(dump_orientation(o))
pc = path_counts(o)
print("m-weights:", {v: str(pc.m(v)) for v in o.vertices})

c = canonical_geodesic(g, f0, f1)
for t in (0.0, 0.25, 0.5, 1.0):
    print(f"t={t:.2f}  f={c.f(t).round(4)}")
