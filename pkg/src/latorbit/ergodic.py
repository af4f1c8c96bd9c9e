"""Dyadic averaging scheme for effective pointwise ergodic bounds, sampled
process ensembles, and Monte Carlo estimates of double equidistribution."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import stats

from latorbit._rng import rng_for
from latorbit.geometry import WeightPair
from latorbit.siegel import Observable, RiemannFunction, exp_ball_haar_mean

TRAJ_STREAM = 2
DOUBLE_STREAM = 3


@dataclass(frozen=True)
class DecayBound:
    """``|E F(t) F(w)| <= C exp(-delta min(t, w - t))`` for ``0 <= t <= w``."""

    C: float
    delta: float

    def __post_init__(self):
        if not (self.C > 0 and self.delta > 0):
            raise ValueError("C and delta must be positive")

    def variance_bound(self, length: float) -> float:
        return 4.0 * self.C / self.delta * length

    def aggregate_bound(self, s: int) -> float:
        return 4.0 * self.C / self.delta * s * 2.0**s

    def exceptional_bound(self, s: int, epsilon: float) -> float:
        return 4.0 * self.C / self.delta * s ** (-(1.0 + 2.0 * epsilon))


# ---------------------------------------------------------------------------
# dyadic intervals


@dataclass(frozen=True, order=True)
class DyadicInterval:
    i: int
    j: int

    def __post_init__(self):
        if self.i < 0 or self.j < 0:
            raise ValueError("dyadic indices must be nonnegative")

    @property
    def start(self) -> int:
        return (1 << self.i) * self.j

    @property
    def end(self) -> int:
        return (1 << self.i) * (self.j + 1)

    def in_family(self, s: int) -> bool:
        return self.end < (1 << s)


def dyadic_family(s: int) -> list[DyadicInterval]:
    """``L_s``: all ``[2^i j, 2^i (j+1)]`` with ``2^i (j+1) < 2^s``."""
    if s < 1:
        raise ValueError("s must be at least 1")
    out = []
    for i in range(s):
        for j in range((1 << (s - i)) - 1):
            out.append(DyadicInterval(i, j))
    return out


def dyadic_cover(k: int, s: int) -> list[DyadicInterval]:
    """Cover of ``[0, k]`` by intervals of ``L_s``, one per set bit of ``k``, longest first."""
    if s < 1:
        raise ValueError("s must be at least 1")
    if not 1 <= k < (1 << s):
        raise ValueError("need 1 <= k < 2^s")
    out = []
    pos = 0
    for i in range(k.bit_length() - 1, -1, -1):
        if k >> i & 1:
            out.append(DyadicInterval(i, pos >> i))
            pos += 1 << i
    return out


# ---------------------------------------------------------------------------
# trajectories


class CachedTrajectory:
    """A trajectory sampled at the midpoints of a uniform grid on ``[0, T]``.

    Integrals over grid-aligned windows are differences of one prefix-sum
    array, so every window integral comes from the same numbers.
    """

    def __init__(self, values: np.ndarray, step: float):
        self.values = np.asarray(values, dtype=float)
        self.step = float(step)
        self.prefix = np.concatenate([[0.0], np.cumsum(self.values * self.step)])

    @property
    def T(self) -> float:
        return len(self.values) * self.step

    def _index(self, t: float) -> int:
        k = round(t / self.step)
        if abs(k * self.step - t) > 1e-9 * max(1.0, abs(t)) or not 0 <= k <= len(self.values):
            raise ValueError(f"time {t} is not on the cached grid")
        return k

    def integral(self, b: float, c: float) -> float:
        return float(self.prefix[self._index(c)] - self.prefix[self._index(b)])

    def integrals(self, starts: np.ndarray, ends: np.ndarray) -> np.ndarray:
        """Vectorised window integrals for integer (grid-aligned) endpoints in time units."""
        per_unit = round(1.0 / self.step)
        return self.prefix[np.asarray(ends) * per_unit] - self.prefix[np.asarray(starts) * per_unit]

    def __call__(self, t) -> np.ndarray:
        idx = np.clip((np.asarray(t) / self.step).astype(int), 0, len(self.values) - 1)
        return self.values[idx]


def window_integral(trajectory, interval: tuple[float, float], step: float | None = None) -> float:
    """Midpoint-rule integral of a trajectory over ``[b, c]``.

    A :class:`CachedTrajectory` is integrated from its prefix sums; a plain
    vectorised callable is sampled at the midpoints of a grid of width
    ``step`` (at most ``(c - b)/4``).
    """
    b, c = map(float, interval)
    if not b < c:
        raise ValueError("need b < c")
    if isinstance(trajectory, CachedTrajectory):
        return trajectory.integral(b, c)
    if step is None or step <= 0 or step > (c - b) / 4:
        raise ValueError("step must be positive and at most (c - b)/4")
    n = math.ceil((c - b) / step - 1e-12)
    h = (c - b) / n
    t = b + (np.arange(n) + 0.5) * h
    return float(np.sum(np.asarray(trajectory(t), dtype=float)) * h)


class ProcessEnsemble:
    """Law of bounded trajectories ``t -> F(y, t)``; ``y`` is drawn from a seeded stream."""

    name = "abstract"
    default_step = 0.25
    bound = 1.0
    claimed_decay: DecayBound | None = None

    def trajectory(self, seed: int, index: int, T: float, step: float | None = None) -> CachedTrajectory:
        raise NotImplementedError

    def describe(self) -> dict:
        d = {"name": self.name, "bound": self.bound}
        if self.claimed_decay is not None:
            d.update(C=self.claimed_decay.C, delta=self.claimed_decay.delta)
        return d


def _block_values(signs: np.ndarray, T: float, step: float) -> np.ndarray:
    per = round(1.0 / step)
    if abs(per * step - 1.0) > 1e-12:
        raise ValueError("block processes need a step dividing 1")
    return np.repeat(signs, per)[: round(T / step)]


class ZeroEnsemble(ProcessEnsemble):
    """``F == 0``; satisfies every decay bound."""

    name = "zero"

    def __init__(self, decay: DecayBound = DecayBound(1.0, 1.0)):
        self.claimed_decay = decay

    def trajectory(self, seed, index, T, step=None):
        step = step or self.default_step
        return CachedTrajectory(np.zeros(round(T / step)), step)


class IIDBlockEnsemble(ProcessEnsemble):
    """Independent fair signs, constant on each unit block ``[k, k+1)``.

    Within a block the correlation is 1 and ``min(t, w - t) < 1``; across
    blocks it is 0.  So ``C = e``, ``delta = 1`` is a valid decay bound.
    """

    name = "iid_block"

    def __init__(self, decay: DecayBound = DecayBound(math.e, 1.0)):
        self.claimed_decay = decay

    def trajectory(self, seed, index, T, step=None):
        step = step or self.default_step
        signs = rng_for(seed, index, TRAJ_STREAM).choice(np.array([-1.0, 1.0]), size=math.ceil(T))
        return CachedTrajectory(_block_values(signs, T, step), step)


class MarkovBlockEnsemble(ProcessEnsemble):
    """Stationary sign chain on unit blocks with correlation ``rho^|k-l|``.

    ``|cov(t, w)| <= rho^(w - t - 1)``, giving ``C = 1/rho``, ``delta = -log rho``.
    """

    name = "markov"

    def __init__(self, rho: float = 0.5):
        if not 0 < rho < 1:
            raise ValueError("rho must lie in (0, 1)")
        self.rho = rho
        self.claimed_decay = DecayBound(1.0 / rho, -math.log(rho))

    def trajectory(self, seed, index, T, step=None):
        step = step or self.default_step
        nb = math.ceil(T)
        rng = rng_for(seed, index, TRAJ_STREAM)
        first = rng.choice(np.array([-1.0, 1.0]))
        # flip with probability (1 - rho)/2 keeps the chain stationary and
        # gives lag-k correlation rho^k
        flips = np.where(rng.random(nb - 1) < (1 - self.rho) / 2, -1.0, 1.0)
        signs = first * np.concatenate([[1.0], np.cumprod(flips)])
        return CachedTrajectory(_block_values(signs, T, step), step)


class DynamicalEnsemble(ProcessEnsemble):
    """``F(theta, t) = phi(g_t u(theta) Z^2) - mean`` for ``phi = exp(-#(L ∩ B_rho \\ 0))``.

    ``theta`` is a uniform dyadic rational ``N / 2^P`` with ``P`` large enough
    that its continued fraction agrees with that of every real in the
    dyadic cell up to denominators beyond ``e^T``.  For ``rho < 1`` only
    multiples of convergent vectors enter the ball, and each multiple does so
    on one explicit time interval, so trajectories are exact up to the grid.
    """

    name = "dynamical"
    default_step = 2.0**-6

    def __init__(self, rho: float = 0.5, mean: float | None = None, decay: DecayBound | None = None):
        if not 0 < rho < 1:
            raise ValueError("rho must lie in (0, 1)")
        self.rho = rho
        self.mean = exp_ball_haar_mean(rho) if mean is None else float(mean)
        self.claimed_decay = decay

    def with_decay(self, decay: DecayBound) -> "DynamicalEnsemble":
        return DynamicalEnsemble(self.rho, self.mean, decay)

    @staticmethod
    def _bits(T: float) -> int:
        return int(math.ceil(2.0 * (T + 2.0) / math.log(2.0))) + 128

    def draw_theta(self, seed: int, index: int, T: float) -> tuple[int, int]:
        P = self._bits(T)
        rng = rng_for(seed, index, TRAJ_STREAM)
        words = rng.integers(0, 1 << 32, size=(P + 31) // 32, dtype=np.uint64)
        N = 0
        for w in words:
            N = (N << 32) | int(w)
        N >>= 32 * len(words) - P
        return max(N, 1), P

    @staticmethod
    def convergent_logs(N: int, P: int, T: float) -> tuple[np.ndarray, np.ndarray]:
        """``(log |q theta - p|, log q)`` over convergents ``p/q`` of ``N/2^P`` with ``log q <= T + 1``."""
        D = 1 << P
        num, den = N, D
        p2, p1 = 0, 1  # p_{-2}, p_{-1}
        q2, q1 = 1, 0
        X2, X1 = N, -D  # q theta - p scaled by D
        us, ws = [], []
        lnD = P * math.log(2.0)
        while den:
            a = num // den
            num, den = den, num - a * den
            p2, p1 = p1, a * p1 + p2
            q2, q1 = q1, a * q1 + q2
            X2, X1 = X1, a * X1 + X2
            if q1 >= 1 and X1 != 0:
                w = math.log(q1)
                if w > T + 1.0:
                    break
                us.append(math.log(abs(X1)) - lnD)
                ws.append(w)
        return np.array(us), np.array(ws)

    def entry_intervals(self, u: np.ndarray, w: np.ndarray, T: float) -> tuple[np.ndarray, np.ndarray]:
        """Times during which ``j (x, q)`` sits in the open ball, for all multiples ``j``.

        ``j^2 (x^2 z + q^2 / z) < rho^2`` with ``z = e^{2t}`` is a quadratic in ``z``.
        """
        los, his = [], []
        rho2 = self.rho**2
        lxq = u + w  # log(|x| q)
        j = 1
        while True:
            s = rho2 / (j * j)
            disc = s * s - 4.0 * np.exp(2.0 * lxq)
            ok = disc > 0
            if not ok.any():
                break
            sq = s + np.sqrt(disc[ok])
            log_zp = np.log(sq) - math.log(2.0) - 2.0 * u[ok]
            log_zm = math.log(2.0) + 2.0 * w[ok] - np.log(sq)
            los.append(0.5 * log_zm)
            his.append(0.5 * log_zp)
            j += 1
        if not los:
            return np.zeros(0), np.zeros(0)
        lo, hi = np.concatenate(los), np.concatenate(his)
        keep = (hi > 0) & (lo < T)
        return lo[keep], hi[keep]

    def ball_counts(self, N: int, P: int, T: float, step: float) -> np.ndarray:
        """``#(g_t Lambda_theta ∩ B_rho \\ 0)`` at the grid midpoints."""
        n = round(T / step)
        mid = (np.arange(n) + 0.5) * step
        u, w = self.convergent_logs(N, P, T)
        lo, hi = self.entry_intervals(u, w, T)
        diff = np.zeros(n + 1, dtype=np.int64)
        a = np.searchsorted(mid, lo, side="right")
        b = np.searchsorted(mid, hi, side="left")
        np.add.at(diff, a, 2)
        np.add.at(diff, b, -2)
        return np.cumsum(diff[:-1])

    def trajectory(self, seed, index, T, step=None):
        step = step or self.default_step
        N, P = self.draw_theta(seed, index, T)
        counts = self.ball_counts(N, P, T, step)
        return CachedTrajectory(np.exp(-counts.astype(float)) - self.mean, step)

    def empirical_mean(self, T: float = 2.0**15, samples: int = 64, seed: int = 0, step: float | None = None):
        """Long-orbit average of ``phi`` and its standard error across thetas."""
        vals = []
        for i in range(samples):
            tr = self.trajectory(seed, i, T, step)
            vals.append(tr.prefix[-1] / tr.T + self.mean)
        vals = np.array(vals)
        return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0


def _trajectories(ens: ProcessEnsemble, seed: int, trials: int, T: float, step: float | None, threads: int = 1):
    def one(i):
        return ens.trajectory(seed, i, T, step)

    if threads <= 1:
        return [one(i) for i in range(trials)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, range(trials)))


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    if len(x) < 2:
        return float(x.mean()), 0.0
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(len(x)))


def _require_decay(ens: ProcessEnsemble) -> DecayBound:
    if ens.claimed_decay is None:
        raise ValueError("ensemble has no decay bound")
    return ens.claimed_decay


def variance_bound_check(
    ens: ProcessEnsemble,
    interval: tuple[float, float],
    trials: int,
    seed: int,
    step: float | None = None,
    threads: int = 1,
) -> tuple[float, float, bool]:
    """Monte Carlo ``E (int_b^c F)^2`` against ``4 C delta^{-1} (c - b)``; passes within 3 standard errors."""
    decay = _require_decay(ens)
    b, c = interval
    trajs = _trajectories(ens, seed, trials, c, step, threads)
    sq = np.array([tr.integral(b, c) ** 2 for tr in trajs])
    est, se = _mean_se(sq)
    bound = decay.variance_bound(c - b)
    return est, bound, bool(est <= bound + 3 * se)


def _family_arrays(s: int) -> tuple[np.ndarray, np.ndarray]:
    fam = dyadic_family(s)
    return np.array([I.start for I in fam]), np.array([I.end for I in fam])


def dyadic_square_sum(tr: CachedTrajectory, s: int) -> float:
    """``sum over I in L_s of (int_I F)^2``."""
    st, en = _family_arrays(s)
    return float(np.sum(tr.integrals(st, en) ** 2))


def aggregate_bound_check(ens: ProcessEnsemble, s: int, trials: int, seed: int, step: float | None = None):
    """``sum_{I in L_s} E (int_I F)^2`` against ``4 C delta^{-1} s 2^s``.

    Returns ``(estimate, std_error, bound, pass)``.
    """
    decay = _require_decay(ens)
    trajs = _trajectories(ens, seed, trials, 2**s, step)
    sums = np.array([dyadic_square_sum(tr, s) for tr in trajs])
    est, se = _mean_se(sums)
    bound = decay.aggregate_bound(s)
    return est, se, bound, bool(est <= bound + 3 * se)


@dataclass(frozen=True)
class ExceptionalReport:
    s: int
    epsilon: float
    empirical_fraction: float
    bound: float
    std_error: float = 0.0
    threshold: float = 0.0
    cauchy_schwarz_holds: bool = True
    outside_bound_holds: bool = True

    @property
    def passes(self) -> bool:
        return self.empirical_fraction <= self.bound + 3 * self.std_error


def exceptional_threshold(s: int, epsilon: float) -> float:
    return 2.0**s * s ** (2.0 + 2.0 * epsilon)


def exceptional_fraction(
    ens: ProcessEnsemble,
    s: int,
    epsilon: float,
    trials: int,
    seed: int,
    step: float | None = None,
    threads: int = 1,
) -> ExceptionalReport:
    """Fraction of trajectories whose dyadic square sum exceeds ``2^s s^{2+2 eps}``.

    Also checks, on the same numbers, that ``(int_0^k F)^2 <= s sum_I (int_I F)^2``
    for every ``k < 2^s`` and that ``|int_0^k F| <= 2^{s/2} s^{3/2+eps}``
    outside the exceptional set.
    """
    decay = _require_decay(ens)
    thr = exceptional_threshold(s, epsilon)
    lim = 2.0 ** (s / 2) * s ** (1.5 + epsilon)
    trajs = _trajectories(ens, seed, trials, 2**s, step, threads)
    flags = np.zeros(trials)
    cs_ok = outside_ok = True
    for n, tr in enumerate(trajs):
        ssum = dyadic_square_sum(tr, s)
        partial = tr.integrals(np.zeros(2**s - 1, dtype=int), np.arange(1, 2**s))
        cs_ok &= bool(np.all(partial**2 <= s * ssum))
        if ssum > thr:
            flags[n] = 1.0
        else:
            outside_ok &= bool(np.all(np.abs(partial) <= lim))
    frac, se = _mean_se(flags)
    return ExceptionalReport(
        s, epsilon, frac, decay.exceptional_bound(s, epsilon), se, thr, cs_ok, outside_ok
    )


def cauchy_schwarz_check(tr: CachedTrajectory, s: int) -> bool:
    """``(int_0^k F)^2 <= s sum_{I in L_s} (int_I F)^2`` for all ``1 <= k < 2^s``."""
    ssum = dyadic_square_sum(tr, s)
    partial = tr.integrals(np.zeros(2**s - 1, dtype=int), np.arange(1, 2**s))
    return bool(np.all(partial**2 <= s * ssum))


@dataclass(frozen=True)
class RateReport:
    T_grid: np.ndarray
    median_abs_error: np.ndarray
    normalized_error: np.ndarray
    slope: float

    def rows(self):
        for T, e, z in zip(self.T_grid, self.median_abs_error, self.normalized_error):
            yield float(T), float(e), float(z)


def pointwise_rate_check(
    ens: ProcessEnsemble,
    T_grid,
    trials: int,
    seed: int,
    step: float | None = None,
    epsilon: float = 0.25,
    threads: int = 1,
) -> RateReport:
    """Median over trajectories of ``|(1/T) int_0^T F|`` on the grid, its normalisation
    by ``T^{-1/2} (log T)^{3/2+eps}``, and the slope of log median against log T."""
    T_grid = np.asarray(T_grid, dtype=float)
    if T_grid.size < 5 or np.any(np.diff(T_grid) <= 0):
        raise ValueError("T_grid must be strictly increasing with at least five points")
    if np.any(T_grid <= 1):
        raise ValueError("T_grid must exceed 1")
    trajs = _trajectories(ens, seed, trials, float(T_grid[-1]), step, threads)
    errs = np.array([[abs(tr.integral(0.0, T)) / T for T in T_grid] for tr in trajs])
    med = np.median(errs, axis=0)
    norm = np.median(errs * np.sqrt(T_grid) / np.log(T_grid) ** (1.5 + epsilon), axis=0)
    if np.all(med > 0):
        slope = float(np.polyfit(np.log(T_grid), np.log(med), 1)[0])
    else:
        slope = float("-inf") if np.all(med == 0) else float("nan")
    return RateReport(T_grid, med, norm, slope)


def fit_decay(
    ens: ProcessEnsemble,
    trials: int,
    seed: int,
    t_max: float = 12.0,
    spacing: float = 0.5,
    deltas=None,
    step: float | None = None,
) -> DecayBound:
    """Empirical ``(C, delta)`` dominating the sampled correlations.

    For each candidate ``delta`` the smallest admissible ``C`` on the grid is
    ``max |cov(t, w)| e^{delta min(t, w - t)}``; the pair minimising
    ``C / delta`` (the constant in the variance bound) is returned.
    """
    trajs = _trajectories(ens, seed, trials, t_max + spacing, step)
    grid = np.arange(0.0, t_max + 1e-9, spacing)
    vals = np.array([tr(grid + tr.step / 2) for tr in trajs])  # (trials, len(grid))
    cov = vals.T @ vals / len(trajs)
    ti, wi = np.triu_indices(len(grid))
    gap = np.minimum(grid[ti], grid[wi] - grid[ti])
    c_abs = np.abs(cov[ti, wi])
    deltas = np.linspace(0.05, 3.0, 60) if deltas is None else np.asarray(deltas)
    best = None
    for dl in deltas:
        C = float(np.max(c_abs * np.exp(dl * gap)))
        C = max(C, 1e-12)
        if best is None or C / dl < best[0] / best[1]:
            best = (C, float(dl))
    return DecayBound(*best)


# ---------------------------------------------------------------------------
# double equidistribution


def _density_values(f_density: RiemannFunction, thetas: np.ndarray) -> np.ndarray:
    return f_density(thetas.reshape(len(thetas), -1))


def double_equi_estimate(
    wp: WeightPair,
    f_density: RiemannFunction,
    phi: Observable,
    psi: Observable,
    t: float,
    w: float,
    mc_samples: int,
    seed: int,
    delta_basis=None,
    lambda_basis=None,
) -> tuple[float, float]:
    """Monte Carlo ``int_M f(theta) phi(g_t u(theta) Delta) psi(g_w u(theta) Lambda) dtheta``.

    ``theta`` is uniform on ``[0,1)^{mn}``, so ``f`` should be supported
    there.  ``Delta`` and ``Lambda`` default to ``Z^d``; other bases are
    handled one sample at a time.
    """
    thetas = rng_for(seed, 0, DOUBLE_STREAM).random((mc_samples, wp.m, wp.n))
    fv = _density_values(f_density, thetas)
    a = _observable_values(phi, thetas, wp, t, delta_basis)
    b = _observable_values(psi, thetas, wp, w, lambda_basis)
    return _mean_se(fv * a * b)


def _observable_values(obs: Observable, thetas, wp, t, basis) -> np.ndarray:
    if basis is None:
        return np.asarray(obs.theta_batch(thetas, wp, t), dtype=float)
    from latorbit.lattice import LatticeBasis, apply_flow

    cols = np.asarray(basis.columns)
    out = []
    for th in thetas:
        U = np.eye(wp.d)
        U[: wp.m, wp.m :] = th
        out.append(obs(apply_flow(LatticeBasis(U @ cols, wp=wp, check=False), wp, t)))
    return np.array(out)


@dataclass(frozen=True)
class DoubleEquiReport:
    rows: list  # (t, w, estimate, std_error, deviation)
    spearman: float
    spearman_pvalue: float


def double_equi_grid(
    wp: WeightPair,
    f_density: RiemannFunction,
    phi: Observable,
    psi: Observable,
    t_grid,
    w_grid,
    mc_samples: int,
    seed: int,
    phi_mean: float,
    psi_mean: float,
) -> DoubleEquiReport:
    """Deviation ``|I(t, w) - int f * mean(phi) * mean(psi)|`` over a grid, and its
    Spearman correlation with ``min(t, w, |w - t|)``.

    All grid points share the same theta samples, so observable values are
    computed once per time.
    """
    thetas = rng_for(seed, 0, DOUBLE_STREAM).random((mc_samples, wp.m, wp.n))
    fv = _density_values(f_density, thetas)
    f_int = f_density.integral()
    times = sorted(set(map(float, t_grid)) | set(map(float, w_grid)))
    vals_phi = {t: np.asarray(phi.theta_batch(thetas, wp, t), dtype=float) for t in times}
    vals_psi = vals_phi if psi is phi else {t: np.asarray(psi.theta_batch(thetas, wp, t), dtype=float) for t in times}
    rows, devs, gaps = [], [], []
    for t in map(float, t_grid):
        for w in map(float, w_grid):
            est, se = _mean_se(fv * vals_phi[t] * vals_psi[w])
            dev = abs(est - f_int * phi_mean * psi_mean)
            rows.append((t, w, est, se, dev))
            devs.append(dev)
            gaps.append(min(t, w, abs(w - t)))
    with np.errstate(divide="ignore"):
        res = stats.spearmanr(np.log(np.maximum(devs, 1e-300)), gaps)
    return DoubleEquiReport(rows, float(res.statistic), float(res.pvalue))


def box_density(lower, upper) -> RiemannFunction:
    """Indicator of a box in the matrix space, normalised to integral one."""
    from latorbit.geometry import Box

    box = Box(lower, upper)
    return RiemannFunction([(1.0 / box.closed_form_volume(), box)])


def constant_function_ensemble(value: Callable[[np.ndarray], np.ndarray], step: float = 0.25):
    """Ensemble whose single trajectory is a deterministic function of time (for tests)."""

    class _Fixed(ProcessEnsemble):
        name = "fixed"
        default_step = step

        def trajectory(self, seed, index, T, step=None):
            h = step or self.default_step
            n = round(T / h)
            return CachedTrajectory(value((np.arange(n) + 0.5) * h), h)

    return _Fixed()
