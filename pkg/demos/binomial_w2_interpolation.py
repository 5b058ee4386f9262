"""
Binomial interpolation along the monotone coupling
==================================================

Each coupled pair (i, j) of the quadratic-cost monotone coupling is joined by
a shifted Bin(j - i, t). When the endpoints are ordered and every f_t is
log-concave, the entropy is convex.
"""

from fractions import Fraction

import numpy as np

from w1plus.binomial_w2 import BinomialW2Curve, compare_h, entropy_convexity_report
from w1plus.transport import Measure

half = Fraction(1, 2)
grid = np.linspace(0, 1, 101)

f0, f1 = Measure({0: half, 1: half}), Measure({2: half, 3: half})
curve = BinomialW2Curve.build(f0, f1)
print("coupling:", curve.pairs)
print("f_1/2 =", curve.f(0.5), " g_1/2 =", curve.g(0.5), " h_1/2 =", curve.h(0.5))
print("h - h~ at t=1/2:", f"{compare_h(f0, f1, 0.5).max_excess:.2e}")
rep = entropy_convexity_report(f0, f1, grid)
print(f"translation pair: {rep.status}, min FD2 H = {rep.min_Hpp_fd:.4f}")

# a mixture of a Dirac and a binomial is not log-concave
mix = entropy_convexity_report(Measure.dirac(0), Measure({0: half, 2: half}), grid)
print(f"mixture: {mix.status}, log-concave at t=1/2: {bool(mix.log_concave[50])}")
