"""Short vectors, thin subgroups and averages of lattice sums.

alpha(L) is the largest inverse covolume of a subgroup of L.  It blows up as a
lattice degenerates, and the number of points of L in a fixed ball grows at the
same speed.  We follow Z^2 and Z^3 along the diagonal flow, then check that the
average of a lattice sum over the unipotent slice matches the slice integral.

Run:  python3 demos/alpha_and_siegel.py
"""
import math

import numpy as np

from latorbit._rng import rng_for
from latorbit.geometry import Annulus, Box, ERegion, WeightPair
from latorbit.lattice import LatticeBasis, alpha, apply_flow, successive_minima
from latorbit.siegel import RiemannFunction, blichfeldt_ratio, siegel_transform_theta_batch, theta_average_identity

for d, wp in ((2, WeightPair.equal(1, 1)), (3, WeightPair.equal(2, 1))):
    Z = LatticeBasis.identity(d, wp)
    print(f"Z^{d} along g_t:   t    alpha   rank   #(ball r=2)   ratio")
    for t in (0.0, 1.0, 2.0, 3.0, 4.0):
        L = apply_flow(Z, wp, t)
        a = alpha(L)
        b = blichfeldt_ratio(L, 2.0)
        print(f"            {t:4.1f}  {a.value:7.2f}   {a.best_rank}     {int(b.count):6d}       {b.ratio:5.2f}")

L = apply_flow(LatticeBasis.identity(3, WeightPair.equal(2, 1)), WeightPair.equal(2, 1), 2.0)
print("\nsuccessive minima of g_2 Z^3:", np.round(successive_minima(L).lambdas, 4))
# g_2 stretches the first two axes by e and shrinks the last by e^-2
print("e^-2, e, e =", np.round([math.exp(-2), math.e, math.e], 4))

wp = WeightPair.equal(1, 1)
print("\nslice average of a lattice sum over theta in [0, 1)")
thetas = rng_for(7, 0).random((5000, 1, 1))
for name, f in (
    ("box [-1/4,1/4] x [-5/2,5/2]", RiemannFunction.indicator(Box([-0.25, -2.5], [0.25, 2.5], wp))),
    ("E_{2,1}", RiemannFunction.indicator(ERegion(2.0, 1.0, wp))),
    ("annulus 2 < |v| < 4", RiemannFunction.indicator(Annulus(4.0, wp))),
):
    exact, _ = theta_average_identity(f, wp)
    vals = siegel_transform_theta_batch(f, thetas, wp)
    print(f"  {name:28s} exact {exact:8.4f}   sampled {vals.mean():8.4f} +- {vals.std() / math.sqrt(len(vals)):.4f}")
