"""From correlation decay to an almost-sure rate, one dyadic step at a time.

A bounded process F(y, t) whose correlations decay like C exp(-delta min(t, w - t))
has time averages that go to zero at rate about T^(-1/2).  The argument covers
[0, k] by at most s dyadic intervals, bounds the sum of squared integrals over
all dyadic intervals below 2^s, and throws away a small exceptional set.  This
script runs each step on two processes: independent random signs on unit blocks
and a lattice observable along a diagonal orbit.

Run:  python3 demos/dyadic_scheme.py
"""
import numpy as np

from latorbit.ergodic import (
    DynamicalEnsemble,
    IIDBlockEnsemble,
    cauchy_schwarz_check,
    dyadic_cover,
    dyadic_family,
    exceptional_fraction,
    fit_decay,
    pointwise_rate_check,
    variance_bound_check,
)

print("cover of [0, 13] inside L_4:", [(I.start, I.end) for I in dyadic_cover(13, 4)])
print("size of L_4:", len(dyadic_family(4)))

iid = IIDBlockEnsemble()
print(f"\nblock signs: claimed decay C = {iid.claimed_decay.C:.3f}, delta = {iid.claimed_decay.delta}")
est, bound, ok = variance_bound_check(iid, (0, 16), trials=1000, seed=1)
print(f"  E(int_0^16 F)^2 = {est:.2f} against the bound {bound:.1f}: {'ok' if ok else 'fails'}")
rep = exceptional_fraction(iid, s=10, epsilon=0.25, trials=300, seed=2)
print(f"  exceptional fraction at s = 10: {rep.empirical_fraction:.3f} (bound {rep.bound:.3f})")

dyn = DynamicalEnsemble(rho=0.5)
print(f"\norbit observable exp(-#(L in B_0.5)), centred at its Haar mean {dyn.mean:.6f}")
decay = fit_decay(dyn, trials=200, seed=3, t_max=8.0)
print(f"  fitted decay from sampled covariances: C = {decay.C:.3f}, delta = {decay.delta:.2f}")
dyn = dyn.with_decay(decay)
est, bound, ok = variance_bound_check(dyn, (0, 16), trials=200, seed=4)
print(f"  E(int_0^16 F)^2 = {est:.3f} against {bound:.2f}: {'ok' if ok else 'fails'}")
tr = dyn.trajectory(5, 0, 2.0**10)
print("  Cauchy-Schwarz step on one trajectory, s = 10:", cauchy_schwarz_check(tr, 10))

grid = 2.0 ** np.arange(6, 13)
for name, ens, n in (("block signs", iid, 300), ("orbit", dyn, 32)):
    r = pointwise_rate_check(ens, grid, trials=n, seed=6)
    print(f"\n{name}: median |(1/T) int_0^T F| by T")
    for T, e in zip(r.T_grid, r.median_abs_error):
        print(f"  T = {int(T):5d}   {e:.5f}")
    print(f"  slope in log-log: {r.slope:.3f} (rate T^-1/2 means -0.5)")
