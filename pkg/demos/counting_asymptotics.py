"""How many rational approximations does a random real have?

For theta uniform in [0, 1) we count integer pairs (p, q) with
1 <= |q| < e^T and |q theta - p| < c / |q|.  The count grows like 4cT.
Below we watch the ratio settle, look at the same count through a
positive-orthant lens, and check the sandwich between orbit time-integrals
and lattice-point counts on one lattice.

Run:  python3 demos/counting_asymptotics.py
"""
import math

import numpy as np

from latorbit.counting import CountQuery, count_solutions, sample_theta, sandwich_check, schmidt_experiment
from latorbit.geometry import WeightPair
from latorbit.lattice import ThetaMatrix, unipotent_lattice

wp = WeightPair.equal(1, 1)

# theta = 0 is the easy hand check: only p = 0 works, and q runs over 1..9 with either sign
print("theta = 0, c = 1/2, T = log 10:", count_solutions(CountQuery(ThetaMatrix([[0.0]], wp), 0.5, math.log(10))))

# a golden-ratio theta has few very good approximations, so its count stays close to the mean
golden = ThetaMatrix([[(math.sqrt(5) - 1) / 2]], wp)
for T in (4.0, 8.0, 12.0):
    n = count_solutions(CountQuery(golden, 1.0, T))
    print(f"golden theta, T = {T:4.1f}: {n:4d} solutions, 4T = {4 * T:5.1f}")

print("\n60 random thetas, plain counts against 4T")
grid = [4.0, 6.0, 8.0, 10.0, 12.0]
rep = schmidt_experiment(60, seed=2024, wp=wp, c=1.0, T_grid=grid)
q05, med, q95 = rep.quantiles()
for T, a, m, b in zip(grid, q05, med, q95):
    print(f"  T = {T:4.1f}   5%: {a:5.3f}   median: {m:5.3f}   95%: {b:5.3f}")

print("\nthe same thetas, only solutions with q > 0 and q theta - p > 0 (predicted cT)")
pos = schmidt_experiment(60, seed=2024, wp=wp, c=1.0, T_grid=grid, region_kind="E_positive_orthants")
print("  median ratios:", np.round(pos.median_ratio(), 3))

# the time spent by g_t Lambda in a thin region is squeezed between two counts
lat = unipotent_lattice(sample_theta(2024, 0, wp))
res = sandwich_check(lat, None, None, r=1.0, c=1.0, T=8.0)
print(f"\nsandwich for one theta: {res.lower} <= {res.middle:.4f} <= {res.upper}  ({'holds' if res.holds else 'VIOLATED'})")
