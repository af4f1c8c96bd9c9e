"""Counting solutions of weighted Diophantine inequalities, exact Birkhoff
time-integrals of indicator Siegel transforms, and the sandwich bounds."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from latorbit._rng import rng_for
from latorbit.geometry import (
    Annulus,
    Ball,
    DirectionSet,
    ERegion,
    FRegion,
    Region,
    WeightPair,
    _directions_ok,
    _log,
    quasi_norm,
    region_volume,
)
from latorbit.lattice import LatticeBasis, ThetaMatrix, enumerate_points, unipotent_lattice

THETA_STREAM = 1
REGION_KINDS = ("E_plain", "E_positive_orthants", "F", "E_directional")


@dataclass(frozen=True)
class CountQuery:
    theta: ThetaMatrix
    c: float
    T: float
    A: DirectionSet | None = None
    B: DirectionSet | None = None
    orthant_I: tuple = ()
    orthant_J: tuple = ()

    def __post_init__(self):
        if not (self.c > 0 and self.T > 0):
            raise ValueError("count query needs c > 0 and T > 0")
        wp = self.theta.wp
        if any(not 0 <= i < wp.m for i in self.orthant_I) or any(not 0 <= j < wp.n for j in self.orthant_J):
            raise ValueError("orthant masks out of range")


def count_solutions(q: CountQuery) -> int:
    """Number of ``(p, q)`` solving the weighted system for ``zeta_I theta eta_J``.

    Masks are 0-based coordinate indices.  Equals the number of points of
    ``Lambda_{theta'}`` in ``E_{T,c}(A, B)``.
    """
    wp = q.theta.wp
    th = q.theta.reflected(q.orthant_I, q.orthant_J)
    reg = ERegion(q.T, q.c, wp, q.A, q.B)
    K, _ = enumerate_points(unipotent_lattice(th), reg, backend="structured")
    return int(len(K))


def count_positive_direct(theta: ThetaMatrix, c: float, T: float) -> int:
    """Count ``q >= 0`` with ``1 <= ||q||_b < e^T`` and ``p`` with
    ``0 <= theta q - p`` coordinatewise and ``||theta q - p||_a < c/||q||_b``.

    Written straight from the inequalities, without the region or lattice
    machinery; the solution ``theta q - p = 0`` is left out, matching the
    convention that the projection of 0 lies in no orthant.
    """
    wp = theta.wp
    a, b = wp.a_arr, wp.b_arr
    Q = np.floor(np.exp(b * T)).astype(int)
    grids = np.meshgrid(*[np.arange(0, k + 1) for k in Q], indexing="ij")
    q = np.stack([g.ravel() for g in grids], axis=1)
    nq = quasi_norm(q, b)
    with np.errstate(divide="ignore"):
        ok = (nq >= 1) & (np.log(nq) < T)
    q, nq = q[ok], nq[ok]
    tq = q @ theta.entries.T
    bound = (c / nq[:, None]) ** a
    # integers p in (tq - bound, tq]
    per = np.floor(tq) - np.floor(tq - bound)
    total = np.prod(per, axis=1)
    exact_zero = np.all(tq == np.floor(tq), axis=1)
    return int(np.sum(total) - np.count_nonzero(exact_zero))


# ---------------------------------------------------------------------------
# Birkhoff integrals


def _flowed_y_logs(basis: LatticeBasis, reg: ERegion) -> np.ndarray:
    _, V = enumerate_points(basis, reg)
    wp = reg.weights
    if len(V) == 0:
        return np.zeros(0)
    return np.log(quasi_norm(V[:, wp.m :], wp.b_arr))


def _wp_of(basis: LatticeBasis, wp: WeightPair | None) -> WeightPair:
    wp = wp or basis.wp
    if wp is None:
        raise ValueError("weights are required for a basis without them")
    return wp


def birkhoff_indicator_integral(
    basis: LatticeBasis,
    A: DirectionSet | None,
    B: DirectionSet | None,
    r: float,
    c: float,
    T: float,
    wp: WeightPair | None = None,
) -> float:
    """``int_0^T sum_v 1_{E_{r,c}(A,B)}(g_t v) dt`` in closed form.

    ``g_t v`` lies in the region exactly for ``t`` in ``(L - r, L]`` with
    ``L = log ||y||_b``, so each point contributes the length of that window
    inside ``[0, T]``.  Only points of ``E_{T+r,c}(A,B)`` can contribute.
    """
    if not (r > 0 and T > 0):
        raise ValueError("need r > 0 and T > 0")
    wp = _wp_of(basis, wp)
    L = _flowed_y_logs(basis, ERegion(T + r, c, wp, A, B))
    return float(np.sum(_window_lengths(L, r, T)))


def _window_lengths(L: np.ndarray, r: float, T: float) -> np.ndarray:
    part = np.clip(np.minimum(L, T) - np.maximum(L - r, 0.0), 0.0, None)
    # whole windows are exactly r, so the normalised sum stays an integer when it should
    return np.where((L - r >= 0.0) & (L <= T), r, part)


@dataclass(frozen=True)
class SandwichResult:
    lower: int
    middle: float
    upper: int
    holds: bool

    @staticmethod
    def judge(lower: int, middle: float, upper: int, tol: float = 1e-9) -> bool:
        return lower <= middle + tol and middle <= upper + tol


def sandwich_check(
    basis: LatticeBasis,
    A: DirectionSet | None,
    B: DirectionSet | None,
    r: float,
    c: float,
    T: float,
    wp: WeightPair | None = None,
) -> SandwichResult:
    """Counts in ``E_T \\ E_r`` and ``E_{r+T}`` around the normalised time integral."""
    if not T > r:
        raise ValueError("sandwich check needs T > r")
    wp = _wp_of(basis, wp)
    K_T, _ = enumerate_points(basis, ERegion(T, c, wp, A, B))
    K_r, _ = enumerate_points(basis, ERegion(r, c, wp, A, B))
    inner = {tuple(k) for k in K_r}
    lower = sum(1 for k in K_T if tuple(k) not in inner)
    upper = len(enumerate_points(basis, ERegion(T + r, c, wp, A, B))[0])
    middle = birkhoff_indicator_integral(basis, A, B, r, c, T, wp) / r
    return SandwichResult(lower, middle, upper, SandwichResult.judge(lower, middle, upper))


@dataclass(frozen=True)
class _SweptBox(Region):
    """Box holding every ``v`` with ``g_t v`` in a given region for some ``t`` in ``[0, T]``."""

    hw: tuple
    pb: float
    weights: WeightPair
    kind = "SweptBox"

    def _contains(self, v):
        return np.all(np.abs(v) < np.array(self.hw), axis=1)

    def half_widths(self):
        return np.array(self.hw)

    def product_bound(self):
        return self.pb


def _swept(reg: Region, T: float) -> _SweptBox:
    wp = reg.weights
    h = reg.half_widths()
    hw = np.concatenate([h[: wp.m], h[wp.m :] * np.exp(wp.b_arr * T)])
    return _SweptBox(tuple(hw * (1 + 1e-12)), reg.product_bound(), wp)


def _sublevel_measure(X2, Y2, a, b, level, T, iters=64):
    """Measure of ``{t in [0,T] : phi(t) < level}`` for the convex
    ``phi(t) = sum X2_i e^{2 a_i t} + sum Y2_j e^{-2 b_j t}`` (rows vectorised)."""

    def phi(t):
        return (X2 * np.exp(2 * a * t[:, None])).sum(1) + (Y2 * np.exp(-2 * b * t[:, None])).sum(1)

    def dphi(t):
        return (2 * a * X2 * np.exp(2 * a * t[:, None])).sum(1) - (2 * b * Y2 * np.exp(-2 * b * t[:, None])).sum(1)

    k = len(X2)
    if k == 0:
        return np.zeros(0)
    lo, hi = np.zeros(k), np.full(k, float(T))
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        up = dphi(mid) > 0
        hi = np.where(up, mid, hi)
        lo = np.where(up, lo, mid)
    tstar = 0.5 * (lo + hi)
    inside = phi(tstar) < level
    # left crossing on [0, t*], phi decreasing there
    l0, l1 = np.zeros(k), tstar.copy()
    r0, r1 = tstar.copy(), np.full(k, float(T))
    for _ in range(iters):
        m = 0.5 * (l0 + l1)
        below = phi(m) < level
        l1 = np.where(below, m, l1)
        l0 = np.where(below, l0, m)
        m = 0.5 * (r0 + r1)
        below = phi(m) < level
        r0 = np.where(below, m, r0)
        r1 = np.where(below, r1, m)
    left = np.where(phi(np.zeros(k)) < level, 0.0, 0.5 * (l0 + l1))
    right = np.where(phi(np.full(k, float(T))) < level, float(T), 0.5 * (r0 + r1))
    return np.where(inside, np.clip(right - left, 0.0, None), 0.0)


def _region_membership_times(reg: Region, V: np.ndarray, T: float) -> np.ndarray:
    """Exact measure of ``{t in [0, T] : g_t v in reg}`` for each row of ``V``."""
    wp = reg.weights
    x, y = V[:, : wp.m], V[:, wp.m :]
    a, b = wp.a_arr, wp.b_arr
    if isinstance(reg, ERegion):
        # product and directions are flow-invariant; only the shell moves
        nx, ny = quasi_norm(x, a), quasi_norm(y, b)
        ok = (ny > 0) & (nx * ny < reg.c)
        ok &= _directions_ok(x, y, reg.A, reg.B, wp, ok)
        with np.errstate(divide="ignore"):
            L = np.where(ok, np.log(np.where(ok, ny, 1.0)), 0.0)
        return np.where(ok, _window_lengths(L, reg.T, T), 0.0)
    if isinstance(reg, FRegion):
        nx = quasi_norm(x, a)
        with np.errstate(divide="ignore"):
            Lx = np.log(nx)
        ok = (nx > 0) & (nx * quasi_norm(y, b) < reg.c)
        lo = np.maximum(-Lx, 0.0)
        hi = np.minimum(reg.r - Lx, T)
        return np.where(ok, np.clip(hi - lo, 0.0, None), 0.0)
    if isinstance(reg, (Ball, Annulus)):
        X2, Y2 = x * x, y * y
        if isinstance(reg, Ball):
            return _sublevel_measure(X2, Y2, a, b, reg.radius**2, T)
        outer = _sublevel_measure(X2, Y2, a, b, reg.outer**2, T)
        # {phi <= inner^2} has the same measure as {phi < inner^2} up to a null set
        inner = _sublevel_measure(X2, Y2, a, b, reg.inner**2, T)
        return outer - inner
    raise NotImplementedError(f"no exact time integral for {type(reg).__name__}")


def birkhoff_average(
    basis: LatticeBasis,
    reg: Region,
    T: float,
    method: str = "exact",
    step: float = 1e-3,
) -> float:
    """``(1/T) int_0^T f^(g_t L) dt`` for ``f`` the indicator of ``reg``.

    ``exact`` sums per-point membership times (closed form for E and F
    regions, convex bracketing for balls and annuli); ``quadrature`` is the
    midpoint rule with the given step and works for any region.
    """
    if not T > 0:
        raise ValueError("T must be positive")
    wp = reg.weights
    _, V = enumerate_points(basis, _swept(reg, T))
    if len(V) == 0:
        return 0.0
    if method == "exact":
        try:
            return float(np.sum(_region_membership_times(reg, V, T))) / T
        except NotImplementedError:
            method = "quadrature"
    if method != "quadrature":
        raise ValueError(f"unknown method {method!r}")
    n = max(1, int(round(T / step)))
    h = T / n
    total = 0
    for k in range(n):
        t = (k + 0.5) * h
        total += int(np.count_nonzero(reg.contains(V * np.exp(wp.exponents * t))))
    return total * h / T


# ---------------------------------------------------------------------------
# Schmidt-type experiments


@dataclass
class CountReport:
    kind: str
    T_grid: np.ndarray
    counts: np.ndarray  # (samples, len(T_grid))
    predicted: np.ndarray  # (len(T_grid),)
    theta_ids: np.ndarray
    predicted_std_error: np.ndarray | None = None
    extended_case: bool = False
    meta: dict = field(default_factory=dict)

    @property
    def ratios(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.predicted > 0, self.counts / self.predicted, np.nan)

    def quantiles(self, qs=(0.05, 0.5, 0.95)) -> np.ndarray:
        """Ratio quantiles per grid point, shape ``(len(qs), len(T_grid))``."""
        return np.quantile(self.ratios, qs, axis=0)

    def median_ratio(self) -> np.ndarray:
        return np.median(self.ratios, axis=0)

    def rows(self):
        for s, tid in enumerate(self.theta_ids):
            for k, T in enumerate(self.T_grid):
                yield int(tid), float(T), int(self.counts[s, k]), float(self.predicted[k]), float(self.ratios[s, k])


def sample_theta(seed: int, index: int, wp: WeightPair) -> ThetaMatrix:
    """Theta uniform on ``[0,1)^{mn}``, drawn from the stream of sample ``index``."""
    return ThetaMatrix(rng_for(seed, index, THETA_STREAM).random((wp.m, wp.n)), wp)


@dataclass(frozen=True)
class _PulledF(Region):
    """``g_{-T} F_{T,c} = {e^{-T} <= ||x||_a < 1, ||x||_a ||y||_b < c}``.

    Tested on the unflowed lattice so that ``x = (±1, 0, ...)`` sits exactly
    on the excluded boundary instead of wherever rounding after a flow puts it.
    """

    T: float
    c: float
    weights: WeightPair
    kind = "PulledF"

    def _contains(self, v):
        wp = self.weights
        nx = quasi_norm(v[:, : wp.m], wp.a_arr)
        ny = quasi_norm(v[:, wp.m :], wp.b_arr)
        lx = _log(nx)
        return (lx >= -self.T) & (lx < 0.0) & (nx * ny < self.c)

    def half_widths(self):
        wp = self.weights
        return np.concatenate([np.ones(wp.m), (self.c * math.exp(self.T)) ** wp.b_arr])

    def product_bound(self):
        return self.c


def _event_logs(theta: ThetaMatrix, kind: str, c: float, T_max: float, A, B) -> np.ndarray:
    """Sorted per-point entry times; see ``_counts_from_logs`` for the boundary side."""
    wp = theta.wp
    lat = unipotent_lattice(theta)
    if kind == "F":
        # counted at T iff -log||x||_a <= T
        _, V = enumerate_points(lat, _PulledF(T_max, c, wp))
        return np.sort(-_log(quasi_norm(V[:, : wp.m], wp.a_arr))) if len(V) else np.zeros(0)
    return np.sort(_flowed_y_logs(lat, ERegion(T_max, c, wp, A, B)))


def _counts_from_logs(L: np.ndarray, T_grid: np.ndarray, kind: str) -> np.ndarray:
    side = "right" if kind == "F" else "left"
    return np.searchsorted(L, T_grid, side=side).astype(np.int64)


def count_region_at(theta: ThetaMatrix, kind: str, c: float, T: float, A=None, B=None) -> int:
    """From-scratch count for one ``T`` (no bucketing)."""
    wp = theta.wp
    lat = unipotent_lattice(theta)
    if kind == "F":
        return len(enumerate_points(lat, _PulledF(T, c, wp))[0])
    A, B = _kind_directions(kind, wp, A, B)
    return len(enumerate_points(lat, ERegion(T, c, wp, A, B))[0])


def _kind_directions(kind: str, wp: WeightPair, A, B):
    if kind == "E_plain" or kind == "F":
        return None, None
    if kind == "E_positive_orthants":
        return DirectionSet.positive(wp.m), DirectionSet.positive(wp.n)
    if kind == "E_directional":
        if A is None or B is None:
            raise ValueError("directional counts need both direction sets")
        return A, B
    raise ValueError(f"unknown region kind {kind!r}")


def schmidt_experiment(
    samples: int,
    seed: int,
    wp: WeightPair,
    c: float,
    T_grid,
    region_kind: str = "E_plain",
    A: DirectionSet | None = None,
    B: DirectionSet | None = None,
    threads: int = 1,
    volume_samples: int = 1_000_000,
    volume_r: float = 1.0,
) -> CountReport:
    """Counts for ``samples`` uniform thetas along ``T_grid``, against the volume growth.

    Each theta is enumerated once at the largest ``T``; counts on the grid
    come from bucketing the points by the time they enter the region.
    """
    T_grid = np.asarray(T_grid, dtype=float)
    if samples < 1:
        raise ValueError("samples must be positive")
    if T_grid.size == 0 or np.any(T_grid <= 0) or np.any(np.diff(T_grid) <= 0):
        raise ValueError("T_grid must be positive and strictly increasing")
    A, B = _kind_directions(region_kind, wp, A, B)
    T_max = float(T_grid[-1])

    def one(i: int) -> np.ndarray:
        th = sample_theta(seed, i, wp)
        return _counts_from_logs(_event_logs(th, region_kind, c, T_max, A, B), T_grid, region_kind)

    if threads <= 1:
        rows = [one(i) for i in range(samples)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(one, range(samples)))
    counts = np.array(rows, dtype=np.int64).reshape(samples, T_grid.size)

    se = None
    if region_kind == "E_directional":
        v, s = region_volume(ERegion(volume_r, c, wp, A, B), "monte_carlo", samples=volume_samples, seed=seed)
        predicted = v * T_grid / volume_r
        se = s * T_grid / volume_r
    else:
        base = 2.0**wp.d * c * T_grid
        predicted = base / 2.0**wp.d if region_kind == "E_positive_orthants" else base
    return CountReport(
        kind=region_kind,
        T_grid=T_grid,
        counts=counts,
        predicted=np.asarray(predicted, dtype=float),
        theta_ids=np.arange(samples),
        predicted_std_error=se,
        extended_case=not np.allclose(wp.b_arr, 1.0 / wp.n),
        meta={"c": c, "seed": seed, "m": wp.m, "n": wp.n},
    )


def error_exponent_fit(report: CountReport, min_points: int = 5) -> tuple[float, float]:
    """Median over thetas of the least-squares slope of ``log|count - predicted|``
    against ``log T`` and the median r^2; grid points with zero error are skipped."""
    logT = np.log(report.T_grid)
    slopes, r2s = [], []
    for row in report.counts:
        err = np.abs(row - report.predicted)
        ok = err > 0
        if np.count_nonzero(ok) < min_points:
            continue
        xs, ys = logT[ok], np.log(err[ok])
        slope, icpt = np.polyfit(xs, ys, 1)
        resid = ys - (slope * xs + icpt)
        sst = np.sum((ys - ys.mean()) ** 2)
        r2s.append(1.0 - np.sum(resid**2) / sst if sst > 0 else 1.0)
        slopes.append(slope)
    if not slopes:
        raise ValueError("no sample has enough nonzero errors to fit")
    return float(np.median(slopes)), float(np.median(r2s))


def birkhoff_theta_median(
    wp: WeightPair,
    reg: Region,
    T: float,
    samples: int,
    seed: int,
    threads: int = 1,
) -> tuple[float, np.ndarray]:
    """Median over uniform thetas of ``(1/T) int_0^T 1_R^(g_t Lambda_theta) dt / |R|``."""
    vol = reg.closed_form_volume()

    def one(i):
        return birkhoff_average(unipotent_lattice(sample_theta(seed, i, wp)), reg, T) / vol

    if threads <= 1:
        vals = [one(i) for i in range(samples)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            vals = list(pool.map(one, range(samples)))
    vals = np.array(vals)
    return float(np.median(vals)), vals


__all__ = [
    "CountQuery",
    "CountReport",
    "SandwichResult",
    "REGION_KINDS",
    "birkhoff_average",
    "birkhoff_indicator_integral",
    "birkhoff_theta_median",
    "count_positive_direct",
    "count_region_at",
    "count_solutions",
    "error_exponent_fit",
    "sample_theta",
    "sandwich_check",
    "schmidt_experiment",
]
