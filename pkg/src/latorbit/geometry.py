"""Weights, weighted quasi-norms and flows, direction sets, regions and volumes.

Points of R^d are split as ``v = (x, y)`` with ``x`` in R^m and ``y`` in
R^n.  All vectorised routines accept either a single point of shape ``(k,)``
or a stack of points of shape ``(N, k)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import gammaln

from latorbit._rng import rng_for

WEIGHT_TOL = 1e-12


class UnsupportedMethodError(ValueError):
    """Requested a computation that has no implementation for this input."""


def _as_weights(w) -> np.ndarray:
    w = np.asarray(w, dtype=float).reshape(-1)
    if w.size == 0 or np.any(~(w > 0)):
        raise ValueError("weights must be a non-empty vector of positive reals")
    return w


@dataclass(frozen=True)
class WeightPair:
    """Weight vectors ``a`` (length m) and ``b`` (length n), each summing to 1."""

    a: tuple
    b: tuple

    def __post_init__(self):
        a = _as_weights(self.a)
        b = _as_weights(self.b)
        if abs(a.sum() - 1.0) > WEIGHT_TOL or abs(b.sum() - 1.0) > WEIGHT_TOL:
            raise ValueError("each weight vector must sum to 1")
        object.__setattr__(self, "a", tuple(float(v) for v in a))
        object.__setattr__(self, "b", tuple(float(v) for v in b))

    @classmethod
    def equal(cls, m: int, n: int) -> "WeightPair":
        return cls((1.0 / m,) * m, (1.0 / n,) * n)

    @property
    def m(self) -> int:
        return len(self.a)

    @property
    def n(self) -> int:
        return len(self.b)

    @property
    def d(self) -> int:
        return self.m + self.n

    @property
    def a_arr(self) -> np.ndarray:
        return np.array(self.a)

    @property
    def b_arr(self) -> np.ndarray:
        return np.array(self.b)

    @property
    def exponents(self) -> np.ndarray:
        """Per-coordinate exponents of g_t: ``(a_1..a_m, -b_1..-b_n)``."""
        return np.concatenate([self.a_arr, -self.b_arr])

    @property
    def is_equal_weights(self) -> bool:
        return np.allclose(self.a, 1.0 / self.m, rtol=0, atol=1e-15) and np.allclose(
            self.b, 1.0 / self.n, rtol=0, atol=1e-15
        )


# ---------------------------------------------------------------------------
# norms and flows


def quasi_norm(x, w) -> np.ndarray | float:
    """``max_i |x_i|^(1/w_i)``, row-wise for stacked input."""
    x = np.asarray(x, dtype=float)
    w = _as_weights(w)
    if x.shape[-1] != w.size:
        raise ValueError(f"dimension mismatch: x has {x.shape[-1]} coordinates, w has {w.size}")
    out = np.max(np.abs(x) ** (1.0 / w), axis=-1)
    return float(out) if out.ndim == 0 else out


def weighted_flow(x, w, t) -> np.ndarray:
    """Apply ``F_{wt}``: coordinate i is multiplied by ``exp(w_i t)``."""
    x = np.asarray(x, dtype=float)
    w = _as_weights(w)
    if x.shape[-1] != w.size:
        raise ValueError("dimension mismatch")
    return x * np.exp(w * t)


def _project_many(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    # Bisection on t -> ||F_{wt} x||_2^2 - 1, which is strictly increasing for x != 0.
    sq = x * x
    norm = np.sqrt(sq.sum(axis=1))
    logn = np.log(norm)
    wmin, wmax = w.min(), w.max()
    lo = np.minimum(-logn / wmin, -logn / wmax)
    k = np.argmax(np.abs(x), axis=1)
    hi = -np.log(np.abs(x[np.arange(len(x)), k])) / w[k]
    lo = np.minimum(lo, hi) - 1e-9
    hi = np.maximum(hi, lo) + 1e-9
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        val = (sq * np.exp(2.0 * np.outer(mid, w))).sum(axis=1)
        above = val > 1.0
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
        if np.all(hi - lo <= 4e-16 * np.maximum(1.0, np.abs(hi))):
            break
    t = 0.5 * (lo + hi)
    return x * np.exp(np.outer(t, w))


def project_to_sphere(x, w) -> np.ndarray:
    """Unique point of the weighted-flow orbit of ``x`` on the Euclidean unit sphere.

    Raises ``ValueError`` at the origin, where the orbit is a single point.
    """
    x = np.asarray(x, dtype=float)
    w = _as_weights(w)
    if x.shape[-1] != w.size:
        raise ValueError("dimension mismatch")
    single = x.ndim == 1
    xs = np.atleast_2d(x)
    if np.any(np.all(xs == 0, axis=1)):
        raise ValueError("projection undefined at origin")
    if np.all(w == w[0]):
        out = xs / np.linalg.norm(xs, axis=1, keepdims=True)
    else:
        out = _project_many(xs, w)
    return out[0] if single else out


def diagonal_flow(v, wp: WeightPair, t) -> np.ndarray:
    """Apply ``g_t = diag(e^{a_i t}, e^{-b_j t})`` to points of R^d."""
    v = np.asarray(v, dtype=float)
    if v.shape[-1] != wp.d:
        raise ValueError(f"expected points of dimension {wp.d}, got {v.shape[-1]}")
    return v * np.exp(wp.exponents * t)


@dataclass(frozen=True)
class FlowDecomposition:
    """``g_t = g'_t g''_t`` with ``g'_t`` of equal-weights type."""

    t: float
    gt: np.ndarray
    gt_prime: np.ndarray
    gt_dblprime: np.ndarray
    b_min: float
    exponents_prime: np.ndarray = field(repr=False)
    exponents_dblprime: np.ndarray = field(repr=False)


def flow_decomposition(wp: WeightPair, t: float) -> FlowDecomposition:
    m, n = wp.m, wp.n
    b_min = min(min(ai / n for ai in wp.a), min(bj / m for bj in wp.b))
    e = wp.exponents * t
    e1 = np.concatenate([np.full(m, n * b_min * t), np.full(n, -m * b_min * t)])
    e2 = e - e1
    # rebuild e from e1 + e2 so that the reconstruction is exact in floating point
    return FlowDecomposition(
        t=float(t),
        gt=np.exp(e1 + e2),
        gt_prime=np.exp(e1),
        gt_dblprime=np.exp(e2),
        b_min=b_min,
        exponents_prime=e1,
        exponents_dblprime=e2,
    )


# ---------------------------------------------------------------------------
# direction sets


@dataclass(frozen=True)
class DirectionSet:
    """Subset of the unit sphere S^{k-1} with exactly decidable membership.

    ``kind`` is ``"full"``, ``"orthants"`` (closed orthants given by sign
    patterns of +1/-1) or ``"boxes"`` (union of closed coordinate boxes
    intersected with the sphere).
    """

    kind: str
    dimension: int
    patterns: tuple = ()
    boxes: tuple = ()

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be positive")
        if self.kind == "orthants":
            pats = tuple(tuple(int(s) for s in p) for p in self.patterns)
            if len(set(pats)) != len(pats) or not pats:
                raise ValueError("orthant patterns must be distinct and non-empty")
            for p in pats:
                if len(p) != self.dimension or any(s not in (1, -1) for s in p):
                    raise ValueError("orthant pattern entries must be +1 or -1")
            object.__setattr__(self, "patterns", pats)
        elif self.kind == "boxes":
            bxs = []
            for lo, hi in self.boxes:
                lo = tuple(float(v) for v in lo)
                hi = tuple(float(v) for v in hi)
                if len(lo) != self.dimension or len(hi) != self.dimension:
                    raise ValueError("box dimension mismatch")
                if any(l > h for l, h in zip(lo, hi)):
                    raise ValueError("box lower bound exceeds upper bound")
                bxs.append((lo, hi))
            if not bxs:
                raise ValueError("at least one box required")
            object.__setattr__(self, "boxes", tuple(bxs))
        elif self.kind != "full":
            raise ValueError(f"unknown direction set kind {self.kind!r}")

    @classmethod
    def full(cls, dimension: int) -> "DirectionSet":
        return cls("full", dimension)

    @classmethod
    def orthants(cls, patterns: Sequence[Sequence[int]]) -> "DirectionSet":
        patterns = [tuple(p) for p in patterns]
        return cls("orthants", len(patterns[0]), patterns=tuple(patterns))

    @classmethod
    def positive(cls, dimension: int) -> "DirectionSet":
        return cls.orthants([(1,) * dimension])

    @classmethod
    def box_union(cls, boxes) -> "DirectionSet":
        boxes = tuple((tuple(lo), tuple(hi)) for lo, hi in boxes)
        return cls("boxes", len(boxes[0][0]), boxes=boxes)

    @property
    def is_full(self) -> bool:
        return self.kind == "full"

    def reflect(self, mask) -> "DirectionSet":
        """Image under the coordinate reflection flipping the coordinates in ``mask``."""
        sign = np.ones(self.dimension, dtype=int)
        sign[list(mask)] = -1
        if self.kind == "full":
            return self
        if self.kind == "orthants":
            return DirectionSet.orthants([tuple(int(s) * int(g) for s, g in zip(p, sign)) for p in self.patterns])
        boxes = []
        for lo, hi in self.boxes:
            nlo = [l if g > 0 else -h for l, h, g in zip(lo, hi, sign)]
            nhi = [h if g > 0 else -l for l, h, g in zip(lo, hi, sign)]
            boxes.append((tuple(nlo), tuple(nhi)))
        return DirectionSet.box_union(boxes)

    def measure_fraction(self) -> float:
        """Fraction of any origin-symmetric, sign-symmetric set carried by these directions.

        Exact for full spheres and orthant unions; box unions have no closed form.
        """
        if self.kind == "full":
            return 1.0
        if self.kind == "orthants":
            return len(self.patterns) / 2.0 ** self.dimension
        raise UnsupportedMethodError("no closed form for box direction sets")

    def contains_vectors(self, x: np.ndarray, w: np.ndarray) -> np.ndarray:
        """Membership of the weighted projections of the rows of ``x`` (all nonzero rows)."""
        x = np.atleast_2d(x)
        if self.kind == "full":
            return np.ones(len(x), dtype=bool)
        if self.kind == "orthants":
            out = np.zeros(len(x), dtype=bool)
            for p in self.patterns:
                p = np.array(p)
                out |= np.all(x * p >= 0, axis=1)
            return out
        u = project_to_sphere(x, w) if len(x) else x
        out = np.zeros(len(x), dtype=bool)
        for lo, hi in self.boxes:
            out |= np.all((u >= np.array(lo)) & (u <= np.array(hi)), axis=1)
        return out

    def to_dict(self) -> dict:
        if self.kind == "full":
            return {"kind": "full", "dimension": self.dimension}
        if self.kind == "orthants":
            return {"kind": "orthants", "patterns": [list(p) for p in self.patterns]}
        return {"kind": "boxes", "boxes": [{"lower": list(lo), "upper": list(hi)} for lo, hi in self.boxes]}

    @classmethod
    def from_dict(cls, data: dict, dimension: int) -> "DirectionSet":
        kind = data.get("kind")
        if kind == "full":
            return cls.full(dimension)
        if kind == "orthants":
            ds = cls.orthants(data["patterns"])
        elif kind == "boxes":
            ds = cls.box_union([(b["lower"], b["upper"]) for b in data["boxes"]])
        else:
            raise ValueError(f"unknown direction set kind {kind!r}")
        if ds.dimension != dimension:
            raise ValueError("direction set dimension does not match weights")
        return ds


# ---------------------------------------------------------------------------
# regions


def ball_volume(dim: int, radius: float) -> float:
    return math.exp((dim / 2) * math.log(math.pi) - gammaln(dim / 2 + 1)) * radius**dim


class Region:
    """Bounded subset of R^d with exact membership.

    Subclasses provide ``contains``, ``bounding_box`` (half-widths of an
    origin-centred box, or explicit lower/upper corners) and
    ``product_bound`` (an upper bound for ``||x||_a ||y||_b`` on the region,
    ``inf`` if none is used).
    """

    weights: WeightPair
    kind: str = ""

    @property
    def dim(self) -> int:
        return self.weights.d

    def contains(self, v) -> np.ndarray | bool:
        v = np.asarray(v, dtype=float)
        if v.shape[-1] != self.dim:
            raise ValueError(f"expected points of dimension {self.dim}")
        single = v.ndim == 1
        out = self._contains(np.atleast_2d(v))
        return bool(out[0]) if single else out

    def _contains(self, v: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def box(self) -> tuple[np.ndarray, np.ndarray]:
        """Lower and upper corners of an axis-aligned box containing the region."""
        h = self.half_widths()
        return -h, h

    def half_widths(self) -> np.ndarray:
        raise NotImplementedError

    def product_bound(self) -> float:
        return math.inf

    @property
    def origin_symmetric(self) -> bool:
        return True

    def closed_form_volume(self) -> float:
        raise UnsupportedMethodError(f"no closed-form volume for {type(self).__name__}")

    def to_dict(self) -> dict:
        raise NotImplementedError


def _log(z: np.ndarray) -> np.ndarray:
    # upper shell bounds are compared in log space so that e.g. T = log 10
    # excludes ||y|| = 10 exactly
    with np.errstate(divide="ignore"):
        return np.log(z)


def _split(v: np.ndarray, m: int):
    return v[:, :m], v[:, m:]


@dataclass(frozen=True)
class ERegion(Region):
    """``{||x||_a < c/||y||_b, 1 <= ||y||_b < e^T, pi_a(x) in A, pi_b(y) in B}``."""

    T: float
    c: float
    weights: WeightPair
    A: DirectionSet | None = None
    B: DirectionSet | None = None
    kind = "E"

    def __post_init__(self):
        if not (self.T > 0 and self.c > 0):
            raise ValueError("E-region needs T > 0 and c > 0")
        A = self.A or DirectionSet.full(self.weights.m)
        B = self.B or DirectionSet.full(self.weights.n)
        if A.dimension != self.weights.m or B.dimension != self.weights.n:
            raise ValueError("direction set dimensions must be (m, n)")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def plain(self) -> bool:
        return self.A.is_full and self.B.is_full

    def _contains(self, v):
        wp = self.weights
        x, y = _split(v, wp.m)
        nx = quasi_norm(x, wp.a)
        ny = quasi_norm(y, wp.b)
        ok = (ny >= 1.0) & (_log(ny) < self.T) & (nx * ny < self.c)
        return ok & _directions_ok(x, y, self.A, self.B, wp, ok)

    def half_widths(self):
        wp = self.weights
        return np.concatenate([self.c ** wp.a_arr, np.exp(wp.b_arr * self.T)])

    def product_bound(self):
        return self.c

    @property
    def origin_symmetric(self):
        return self.plain

    def closed_form_volume(self):
        base = 2.0**self.dim * self.c * self.T
        if self.B.kind == "boxes" or self.A.kind == "boxes":
            raise UnsupportedMethodError("closed form unavailable for box direction sets")
        return base * self.A.measure_fraction() * self.B.measure_fraction()

    def to_dict(self):
        return {"kind": "E", "T": self.T, "c": self.c, "A": self.A.to_dict(), "B": self.B.to_dict()}


def _directions_ok(x, y, A, B, wp, mask):
    out = np.ones(len(x), dtype=bool)
    if A.is_full and B.is_full:
        return out
    idx = np.nonzero(mask)[0]
    if idx.size == 0:
        return out
    xs, ys = x[idx], y[idx]
    good = np.ones(idx.size, dtype=bool)
    if not A.is_full:
        nz = np.any(xs != 0, axis=1)
        good &= nz
        sel = np.nonzero(nz)[0]
        if sel.size:
            good[sel] &= A.contains_vectors(xs[sel], wp.a_arr)
    if not B.is_full:
        nz = np.any(ys != 0, axis=1)
        good &= nz
        sel = np.nonzero(nz)[0]
        if sel.size:
            good[sel] &= B.contains_vectors(ys[sel], wp.b_arr)
    out[idx] = good
    return out


@dataclass(frozen=True)
class FRegion(Region):
    """``{||x||_a ||y||_b < c, 1 <= ||x||_a < e^r}``."""

    r: float
    c: float
    weights: WeightPair
    kind = "F"

    def __post_init__(self):
        if not (self.r > 0 and self.c > 0):
            raise ValueError("F-region needs r > 0 and c > 0")

    def _contains(self, v):
        wp = self.weights
        x, y = _split(v, wp.m)
        nx = quasi_norm(x, wp.a)
        ny = quasi_norm(y, wp.b)
        return (nx >= 1.0) & (_log(nx) < self.r) & (nx * ny < self.c)

    def half_widths(self):
        wp = self.weights
        return np.concatenate([np.exp(wp.a_arr * self.r), self.c ** wp.b_arr])

    def product_bound(self):
        return self.c

    def closed_form_volume(self):
        return 2.0**self.dim * self.c * self.r

    def to_dict(self):
        return {"kind": "F", "r": self.r, "c": self.c}


@dataclass(frozen=True)
class Annulus(Region):
    """Open Euclidean annulus ``{inner < |v| < outer}``; ``inner`` defaults to d."""

    outer: float
    weights: WeightPair
    inner: float | None = None
    kind = "Annulus"

    def __post_init__(self):
        inner = float(self.weights.d) if self.inner is None else float(self.inner)
        if inner < 0 or not self.outer > inner:
            raise ValueError("annulus needs outer > inner >= 0")
        object.__setattr__(self, "inner", inner)

    def _contains(self, v):
        r2 = np.einsum("ij,ij->i", v, v)
        return (r2 > self.inner**2) & (r2 < self.outer**2)

    def half_widths(self):
        return np.full(self.dim, float(self.outer))

    def product_bound(self):
        return _ball_product_bound(self.outer, self.weights)

    def closed_form_volume(self):
        return ball_volume(self.dim, self.outer) - ball_volume(self.dim, self.inner)

    def to_dict(self):
        return {"kind": "Annulus", "inner": self.inner, "outer": self.outer}


def _ball_product_bound(R: float, wp: WeightPair) -> float:
    # |x_i| < R for all i  =>  ||x||_a < max_i R^(1/a_i); likewise for y
    bx = max(R ** (1.0 / ai) for ai in wp.a)
    by = max(R ** (1.0 / bj) for bj in wp.b)
    return bx * by


@dataclass(frozen=True)
class Ball(Region):
    """Open Euclidean ball of the given radius centred at the origin."""

    radius: float
    weights: WeightPair
    kind = "Ball"

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("ball radius must be positive")

    def _contains(self, v):
        return np.einsum("ij,ij->i", v, v) < self.radius**2

    def half_widths(self):
        return np.full(self.dim, float(self.radius))

    def product_bound(self):
        return _ball_product_bound(self.radius, self.weights)

    def closed_form_volume(self):
        return ball_volume(self.dim, self.radius)

    def to_dict(self):
        return {"kind": "Ball", "radius": self.radius}


@dataclass(frozen=True)
class Box(Region):
    """Closed axis-aligned box ``lower <= v <= upper``.

    ``weights`` is optional; without it the box lives in R^k with k taken from
    the corners (used for densities on the matrix space M).
    """

    lower: tuple
    upper: tuple
    weights: WeightPair | None = None
    kind = "Box"

    def __post_init__(self):
        lo = tuple(float(v) for v in np.ravel(self.lower))
        hi = tuple(float(v) for v in np.ravel(self.upper))
        if len(lo) != len(hi) or any(l > h for l, h in zip(lo, hi)):
            raise ValueError("invalid box corners")
        if self.weights is not None and len(lo) != self.weights.d:
            raise ValueError("box dimension does not match weights")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self):
        return len(self.lower)

    def _contains(self, v):
        return np.all((v >= np.array(self.lower)) & (v <= np.array(self.upper)), axis=1)

    def box(self):
        return np.array(self.lower), np.array(self.upper)

    def half_widths(self):
        return np.maximum(np.abs(self.lower), np.abs(self.upper))

    @property
    def origin_symmetric(self):
        return np.allclose(self.lower, -np.array(self.upper))

    def closed_form_volume(self):
        return float(np.prod(np.array(self.upper) - np.array(self.lower)))

    def to_dict(self):
        return {"kind": "Box", "lower": list(self.lower), "upper": list(self.upper)}


def region_contains(reg: Region, v) -> np.ndarray | bool:
    return reg.contains(v)


def region_from_dict(data: dict, wp: WeightPair) -> Region:
    kind = data.get("kind")
    if kind == "E":
        A = DirectionSet.from_dict(data.get("A", {"kind": "full"}), wp.m)
        B = DirectionSet.from_dict(data.get("B", {"kind": "full"}), wp.n)
        return ERegion(float(data["T"]), float(data["c"]), wp, A, B)
    if kind == "F":
        return FRegion(float(data["r"]), float(data["c"]), wp)
    if kind == "Annulus":
        return Annulus(float(data["outer"]), wp, data.get("inner"))
    if kind == "Ball":
        return Ball(float(data["radius"]), wp)
    if kind == "Box":
        return Box(data["lower"], data["upper"], wp)
    raise ValueError(f"unknown region kind {kind!r}")


def region_volume(
    reg: Region,
    method: str = "closed_form",
    samples: int = 1_000_000,
    seed: int = 0,
    chunk: int = 1 << 18,
) -> tuple[float, float]:
    """Volume of ``reg`` and its standard error.

    ``closed_form`` is exact (standard error 0) for full-sphere and orthant
    E-regions, F-regions, annuli, balls and boxes.  ``monte_carlo`` samples the
    bounding box uniformly and returns the hit-fraction estimate with its
    binomial standard error.
    """
    if method == "closed_form":
        return float(reg.closed_form_volume()), 0.0
    if method != "monte_carlo":
        raise ValueError(f"unknown volume method {method!r}")
    if samples < 1:
        raise ValueError("samples must be positive")
    lo, hi = reg.box()
    width = hi - lo
    box_vol = float(np.prod(width))
    hits = 0
    done = 0
    block = 0
    while done < samples:
        k = min(chunk, samples - done)
        rng = rng_for(seed, block, stream=11)
        pts = lo + width * rng.random((k, len(lo)))
        hits += int(np.count_nonzero(reg.contains(pts)))
        done += k
        block += 1
    p = hits / samples
    return box_vol * p, box_vol * math.sqrt(p * (1.0 - p) / samples)
