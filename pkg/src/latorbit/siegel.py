"""Siegel transforms of finite indicator combinations, the theta-slice average,
and the comparison between the ball count and alpha."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from latorbit.geometry import (
    Annulus,
    Ball,
    Box,
    ERegion,
    FRegion,
    Region,
    UnsupportedMethodError,
    WeightPair,
    ball_volume,
    quasi_norm,
)
from latorbit.lattice import LatticeBasis, alpha, enumerate_points, structured_candidates


class RiemannFunction:
    """``sum_k coef_k * 1_{R_k}``: a bounded, boundedly supported step function."""

    def __init__(self, terms: Iterable[tuple[float, Region]] = ()):
        self.terms = [(float(c), r) for c, r in terms]
        dims = {r.dim for _, r in self.terms}
        if len(dims) > 1:
            raise ValueError("all regions must live in the same space")

    @classmethod
    def indicator(cls, region: Region) -> "RiemannFunction":
        return cls([(1.0, region)])

    @property
    def dim(self) -> int | None:
        return self.terms[0][1].dim if self.terms else None

    def __call__(self, v) -> np.ndarray:
        v = np.atleast_2d(np.asarray(v, dtype=float))
        out = np.zeros(len(v))
        for c, r in self.terms:
            out += c * r.contains(v)
        return out

    def __add__(self, other: "RiemannFunction") -> "RiemannFunction":
        return RiemannFunction(self.terms + other.terms)

    def __mul__(self, k: float) -> "RiemannFunction":
        return RiemannFunction([(k * c, r) for c, r in self.terms])

    __rmul__ = __mul__

    def __neg__(self) -> "RiemannFunction":
        return self * -1.0

    def __sub__(self, other: "RiemannFunction") -> "RiemannFunction":
        return self + (-other)

    def support_box(self) -> tuple[np.ndarray, np.ndarray]:
        los, his = zip(*(r.box() for _, r in self.terms))
        return np.min(los, axis=0), np.max(his, axis=0)

    def integral(self) -> float:
        return sum(c * r.closed_form_volume() for c, r in self.terms)


def siegel_transform(f: RiemannFunction, basis: LatticeBasis, backend: str = "auto") -> float:
    """``sum over nonzero lattice points v of f(v)``, computed exactly by enumeration."""
    total = 0.0
    for c, reg in f.terms:
        if c == 0.0:
            continue
        K, _ = enumerate_points(basis, reg, backend=backend)
        total += c * len(K)
    return total


def siegel_transform_theta_batch(
    f: RiemannFunction, thetas: np.ndarray, wp: WeightPair, t: float = 0.0
) -> np.ndarray:
    """Siegel transform of ``f`` at ``g_t u(theta) Z^d`` for a stack of thetas."""
    thetas = np.asarray(thetas, dtype=float).reshape(-1, wp.m, wp.n)
    out = np.zeros(len(thetas))
    scale = np.exp(wp.exponents * t)
    for c, reg in f.terms:
        if c == 0.0:
            continue
        counts = np.zeros(len(thetas), dtype=np.int64)
        for b_idx, K in structured_candidates(thetas, wp, t, reg):
            p = -K[:, : wp.m].astype(float)
            q = K[:, wp.m :].astype(float)
            x = np.einsum("kmn,kn->km", thetas[b_idx], q) - p
            v = np.concatenate([x, q], axis=1) * scale
            keep = reg.contains(v) & np.any(K != 0, axis=1)
            counts += np.bincount(b_idx[keep], minlength=len(thetas))
        out += c * counts
    return out


# ---------------------------------------------------------------------------
# theta-slice average


def _q_box(bounds: np.ndarray) -> np.ndarray:
    Q = np.floor(bounds).astype(int)
    grids = np.meshgrid(*[np.arange(-k, k + 1) for k in Q], indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def _int_points_in(reg_test: Callable[[np.ndarray], np.ndarray], half: np.ndarray) -> int:
    P = _q_box(half)
    P = P[np.any(P != 0, axis=1)]
    return int(np.count_nonzero(reg_test(P))) if len(P) else 0


def _slice_average(reg: Region, wp: WeightPair) -> float:
    m, n = wp.m, wp.n
    a, b = wp.a_arr, wp.b_arr
    if isinstance(reg, ERegion):
        fracA = reg.A.measure_fraction()
        q = _q_box(np.exp(b * reg.T))
        q = q[np.any(q != 0, axis=1)]
        nq = quasi_norm(q, b)
        ok = (nq >= 1) & (np.log(nq) < reg.T)
        if not reg.B.is_full:
            ok &= reg.B.contains_vectors(q.astype(float), b)
        return float(np.sum(2.0**m * reg.c / nq[ok]) * fracA)
    if isinstance(reg, FRegion):
        q = _q_box(reg.c**b)
        q = q[np.any(q != 0, axis=1)]
        total = 0.0
        if len(q):
            nq = quasi_norm(q, b)
            top = np.minimum(math.exp(reg.r), reg.c / nq)
            total = float(np.sum(2.0**m * np.clip(top - 1.0, 0.0, None)))
        zero_terms = _int_points_in(
            lambda P: (quasi_norm(P, a) >= 1) & (np.log(quasi_norm(P, a)) < reg.r), np.exp(a * reg.r)
        )
        return total + zero_terms
    if isinstance(reg, (Ball, Annulus)):
        outer = reg.radius if isinstance(reg, Ball) else reg.outer
        inner = 0.0 if isinstance(reg, Ball) else reg.inner
        q = _q_box(np.full(n, outer))
        q = q[np.any(q != 0, axis=1)]
        total = 0.0
        if len(q):
            r2 = np.sum(q * q, axis=1).astype(float)
            vo = np.array([ball_volume(m, math.sqrt(max(outer**2 - s, 0.0))) if s < outer**2 else 0.0 for s in r2])
            vi = np.array([ball_volume(m, math.sqrt(inner**2 - s)) if s < inner**2 else 0.0 for s in r2])
            total = float(np.sum(vo - vi))

        def zero_test(P):
            s = np.sum(P * P, axis=1)
            return (s > inner**2) & (s < outer**2)

        return total + _int_points_in(zero_test, np.full(m, outer))
    if isinstance(reg, Box):
        lo, hi = np.array(reg.lower), np.array(reg.upper)
        ylo, yhi = lo[m:], hi[m:]
        q = _q_box(np.maximum(np.abs(ylo), np.abs(yhi)))
        inside = np.all((q >= ylo) & (q <= yhi), axis=1)
        nz = np.any(q != 0, axis=1)
        total = float(np.count_nonzero(inside & nz) * np.prod(hi[:m] - lo[:m]))
        if np.all((ylo <= 0) & (yhi >= 0)):
            total += _int_points_in(
                lambda P: np.all((-P >= lo[:m]) & (-P <= hi[:m]), axis=1), np.maximum(np.abs(lo[:m]), np.abs(hi[:m]))
            )
        return total
    raise UnsupportedMethodError(f"no slice integral for {type(reg).__name__}")


def theta_average_identity(f: RiemannFunction, wp: WeightPair) -> tuple[float, str]:
    """Exact mean of the Siegel transform of ``f`` over ``theta`` uniform in ``[0,1)^{mn}``.

    For fixed ``q != 0`` the point ``theta q mod Z^m`` is uniform, so the
    ``q``-row contributes the x-slice integral of ``f`` at ``y = q``; the row
    ``q = 0`` is the fixed set ``{(-p, 0)}``.
    """
    value = sum(c * _slice_average(reg, wp) for c, reg in f.terms)
    return value, "theta-slice average: x-slice integrals over q != 0 plus the q = 0 row"


# ---------------------------------------------------------------------------
# ball count against alpha


@dataclass(frozen=True)
class BlichfeldtRatio:
    ratio: float
    count: float
    alpha: float
    exact: bool

    def __float__(self):
        return self.ratio


def blichfeldt_ratio(basis: LatticeBasis, r: float) -> BlichfeldtRatio:
    """Number of nonzero lattice points in the open r-ball divided by alpha."""
    wp = basis.wp or WeightPair.equal(basis.d - 1, 1)
    count = siegel_transform(RiemannFunction.indicator(Ball(r, wp)), basis)
    al = alpha(basis)
    return BlichfeldtRatio(count / al.value, count, al.value, al.exact)


# ---------------------------------------------------------------------------
# observables on the space of lattices


class Observable:
    """A bounded function of a lattice, evaluable one basis at a time or on theta batches."""

    def __call__(self, basis: LatticeBasis) -> float:
        raise NotImplementedError

    def theta_batch(self, thetas: np.ndarray, wp: WeightPair, t: float) -> np.ndarray:
        """Values at ``g_t u(theta) Z^d`` for a stack of thetas."""
        from latorbit.lattice import ThetaMatrix, apply_flow, unipotent_lattice

        return np.array([self(apply_flow(unipotent_lattice(ThetaMatrix(th, wp)), wp, t)) for th in thetas])

    def __add__(self, other: "Observable") -> "Observable":
        return LinearObservable([(1.0, self), (1.0, other)])

    def __rmul__(self, k: float) -> "Observable":
        return LinearObservable([(float(k), self)])


class ConstantObservable(Observable):
    def __init__(self, value: float = 1.0):
        self.value = float(value)

    def __call__(self, basis):
        return self.value

    def theta_batch(self, thetas, wp, t):
        return np.full(len(np.asarray(thetas).reshape(-1, wp.m, wp.n)), self.value)


class LinearObservable(Observable):
    def __init__(self, terms):
        self.terms = list(terms)

    def __call__(self, basis):
        return sum(c * o(basis) for c, o in self.terms)

    def theta_batch(self, thetas, wp, t):
        return sum(c * o.theta_batch(thetas, wp, t) for c, o in self.terms)


class SiegelObservable(Observable):
    """``post(f^(L))`` for a Riemann function ``f``; ``post`` defaults to ``exp(-s)``."""

    def __init__(self, f: RiemannFunction, post: Callable[[np.ndarray], np.ndarray] | None = None):
        self.f = f
        self.post = post or (lambda s: np.exp(-s))

    def __call__(self, basis):
        return float(self.post(np.asarray(siegel_transform(self.f, basis))))

    def theta_batch(self, thetas, wp, t):
        return self.post(siegel_transform_theta_batch(self.f, thetas, wp, t))


def exp_ball_observable(rho: float, wp: WeightPair) -> SiegelObservable:
    """``exp(-#(L ∩ B_rho \\ 0))``."""
    return SiegelObservable(RiemannFunction.indicator(Ball(rho, wp)))


def exp_ball_haar_mean(rho: float, terms: int = 200) -> float:
    """Haar mean of ``exp(-#(L ∩ B_rho \\ 0))`` on unimodular lattices in R^2, rho <= 1.

    For rho <= 1 the nonzero points in the ball are the multiples ``±j v`` of
    one primitive vector, and ``mu(lambda_1 < e) = 3 e^2 / pi`` for e <= 1.
    """
    if not 0 < rho <= 1:
        raise ValueError("closed form needs 0 < rho <= 1")
    s = sum(math.exp(-2.0 * (j - 1)) * 3.0 * rho * rho / (math.pi * j * j) for j in range(1, terms))
    return 1.0 - (1.0 - math.exp(-2.0)) * s
