"""
Entropy along a chain
=====================

Moving a point mass from 0 to n on a segment of the integers. The canonical
curve is the binomial family, and its entropy is convex in t.
"""

import numpy as np

from w1plus import Measure, canonical_geodesic, entropy_along_curve, path_graph
from w1plus.geodesic import binomial_pmf, eval_triple
from w1plus.entropy import w_squared

n = 5
g = path_graph(n + 1)
c = canonical_geodesic(g, Measure.dirac(0), Measure.dirac(n))
print(f"{g.name}: {len(c.orientation.edges)} oriented edges, |EG| = {c.eg}")

# the curve is Bin(n, t) up to round-off
t = 0.3
print("f_0.3       =", np.round(c.f(t), 6))
print("Bin(5, 0.3) =", np.round(binomial_pmf(n, t), 6))

# H'' from the curvature functional, and a finite-difference cross-check
grid = np.linspace(0, 1, 41)
rep = entropy_along_curve(c, grid, p_values=(0.5,))
for i in (4, 20, 36):
    print(f"t={grid[i]:.2f}  H={rep.H[i]: .5f}  H''={rep.Hpp_analytic[i]:.5f}  fd={rep.Hpp_fd[i]:.5f}")
print("min H'' on refined grid:", round(rep.min_Hpp, 5), "convex:", rep.convex)
print("min second difference of the Renyi 1/2 curve:", f"{rep.renyi_second_diff[0.5].min():.2e}")

# sum of h over triples does not move with t
print("W^2 at t = 0.1, 0.5, 0.9:", [round(w_squared(eval_triple(c, s)), 12) for s in (0.1, 0.5, 0.9)])
