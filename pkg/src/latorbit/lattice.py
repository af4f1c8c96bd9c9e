"""Unimodular lattices, the embedding u(theta), flows, point enumeration,
successive minima and the alpha function."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np

from latorbit._enum import enumerate_ball, gcd_of_minors, lll_reduce
from latorbit.geometry import Region, WeightPair, ball_volume

DET_TOL = 1e-9


class UnsupportedDimensionError(ValueError):
    pass


@dataclass(frozen=True)
class ThetaMatrix:
    """An m x n real matrix parameterising the unipotent orbit."""

    entries: np.ndarray
    wp: WeightPair

    def __post_init__(self):
        e = np.array(self.entries, dtype=float).reshape(self.wp.m, self.wp.n)
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    def reflected(self, I=(), J=()) -> "ThetaMatrix":
        """``zeta_I theta eta_J``: negate rows in ``I`` and columns in ``J``."""
        e = self.entries.copy()
        e[list(I), :] *= -1
        e[:, list(J)] *= -1
        return ThetaMatrix(e, self.wp)


@dataclass(frozen=True)
class LatticeBasis:
    """A lattice ``{columns @ k : k in Z^d}``.

    When ``theta`` is set the basis is ``g_{t_applied} u(theta)`` applied to the
    standard basis, and integer coordinates are ``k = (-p, q)``, so the point
    with coordinates ``k`` is ``g_t (theta q - p, q)``.
    """

    columns: np.ndarray
    wp: WeightPair | None = None
    theta: ThetaMatrix | None = None
    t_applied: float = 0.0
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        cols = np.array(self.columns, dtype=float)
        if cols.ndim != 2 or cols.shape[0] != cols.shape[1]:
            raise ValueError("basis must be a square matrix")
        if self.check and abs(np.linalg.det(cols) - 1.0) > DET_TOL * max(1.0, np.abs(cols).max() ** cols.shape[0]):
            raise ValueError(f"basis is not unimodular (det = {np.linalg.det(cols)!r})")
        cols.setflags(write=False)
        object.__setattr__(self, "columns", cols)

    @property
    def d(self) -> int:
        return self.columns.shape[0]

    @property
    def structured(self) -> bool:
        return self.theta is not None

    @classmethod
    def identity(cls, d: int, wp: WeightPair | None = None) -> "LatticeBasis":
        if wp is not None:
            return unipotent_lattice(ThetaMatrix(np.zeros((wp.m, wp.n)), wp))
        return cls(np.eye(d))

    def embed(self, K) -> np.ndarray:
        """Real points for integer coordinate rows ``K``."""
        K = np.atleast_2d(np.asarray(K))
        if self.theta is not None:
            m = self.wp.m
            p = -K[:, :m].astype(float)
            q = K[:, m:].astype(float)
            x = q @ self.theta.entries.T - p
            v = np.concatenate([x, q], axis=1)
            if self.t_applied != 0.0:
                v = v * np.exp(self.wp.exponents * self.t_applied)
            return v
        return K.astype(float) @ self.columns.T


def unipotent_lattice(theta: ThetaMatrix) -> LatticeBasis:
    """Basis of ``u(theta) Z^d = {(theta q - p, q)}``."""
    wp = theta.wp
    m, n = wp.m, wp.n
    B = np.eye(wp.d)
    B[:m, m:] = theta.entries
    return LatticeBasis(B, wp=wp, theta=theta, t_applied=0.0)


def apply_flow(basis: LatticeBasis, wp: WeightPair, t: float) -> LatticeBasis:
    """``g_t`` applied to every basis vector; the structured form is kept."""
    if basis.wp is not None and basis.wp != wp:
        raise ValueError("weights differ from the lattice's weights")
    scale = np.exp(wp.exponents * t)
    if basis.theta is not None:
        t_new = basis.t_applied + t
        B = np.eye(wp.d)
        B[: wp.m, wp.m :] = basis.theta.entries
        cols = B * np.exp(wp.exponents * t_new)[:, None]
        return LatticeBasis(cols, wp=wp, theta=basis.theta, t_applied=t_new, check=False)
    return LatticeBasis(basis.columns * scale[:, None], wp=wp, check=False)


# ---------------------------------------------------------------------------
# enumeration


def _q_grid(Q: np.ndarray, start: int, stop: int) -> np.ndarray:
    shape = tuple(int(2 * qj + 1) for qj in Q)
    idx = np.arange(start, stop)
    cols = np.unravel_index(idx, shape)
    return np.stack([c - qj for c, qj in zip(cols, Q)], axis=1).astype(np.int64)


def structured_candidates(thetas: np.ndarray, wp: WeightPair, s: float, region: Region, max_rows: int = 1 << 20):
    """Yield ``(batch_index, K)`` candidate coordinates for lattices ``g_s u(theta_b) Z^d``.

    The candidates are a superset of the lattice points inside ``region``:
    ``q`` runs over the pulled-back y-box and, for each ``q``, ``p`` over the
    integers with ``|(theta q)_i - p_i|`` below the pulled-back x-bound,
    sharpened by the region's bound on ``||x||_a ||y||_b``.
    """
    thetas = np.asarray(thetas, dtype=float).reshape(-1, wp.m, wp.n)
    m, n = wp.m, wp.n
    h = region.half_widths()
    if not np.all(np.isfinite(h)):
        raise ValueError("region is unbounded")
    hx = h[:m] * np.exp(-wp.a_arr * s)
    hy = h[m:] * np.exp(wp.b_arr * s)
    prod_bound = region.product_bound()
    Q = np.floor(hy * (1 + 1e-12) + 1e-12).astype(np.int64)
    total_q = int(np.prod(2 * Q + 1))
    nb = len(thetas)
    step = max(1, max_rows // max(nb, 1))
    a = wp.a_arr
    for start in range(0, total_q, step):
        q = _q_grid(Q, start, min(total_q, start + step))
        bx = np.broadcast_to(hx, (len(q), m)).copy()
        if math.isfinite(prod_bound):
            nq = np.max(np.abs(q) ** (1.0 / wp.b_arr), axis=1)
            nz = nq > 0
            bx[nz] = np.minimum(bx[nz], (prod_bound / nq[nz, None]) ** a)
        bx = bx * (1 + 1e-9) + 1e-12
        tq = np.einsum("bmn,qn->bqm", thetas, q)  # (nb, nq, m)
        lo = np.ceil(tq - bx[None]).astype(np.int64)
        hi = np.floor(tq + bx[None]).astype(np.int64)
        cnt = np.clip(hi - lo + 1, 0, None)
        tot = np.prod(cnt, axis=2).reshape(-1)
        if not tot.any():
            continue
        rows = np.repeat(np.arange(tot.size), tot)
        # position of each expanded row inside its group
        offs = np.arange(rows.size) - np.repeat(np.cumsum(tot) - tot, tot)
        cnt_f = cnt.reshape(-1, m)[rows]
        lo_f = lo.reshape(-1, m)[rows]
        p = np.empty_like(lo_f)
        rem = offs.copy()
        for i in range(m):
            p[:, i] = lo_f[:, i] + rem % cnt_f[:, i]
            rem //= cnt_f[:, i]
        b_idx = rows // len(q)
        q_rows = q[rows % len(q)]
        K = np.concatenate([-p, q_rows], axis=1)
        yield b_idx, K


def _sort_rows(K: np.ndarray) -> np.ndarray:
    if len(K) == 0:
        return np.zeros(0, dtype=np.int64)
    return np.lexsort(K.T[::-1])


def enumerate_points(
    basis: LatticeBasis,
    reg: Region,
    backend: str = "auto",
    include_origin: bool = False,
) -> tuple[np.ndarray, np.ndarray]:
    """Lattice points inside ``reg`` as ``(K, V)``: integer coordinates and embeddings.

    Rows are sorted lexicographically by coordinates.  The origin is excluded
    unless ``include_origin`` is set and the region contains it.
    """
    if backend == "auto":
        backend = "structured" if basis.structured else "generic"
    h = reg.half_widths()
    if not np.all(np.isfinite(h)):
        raise ValueError("region is unbounded")
    if reg.dim != basis.d:
        raise ValueError("region and lattice dimensions differ")
    if backend == "structured":
        if not basis.structured:
            raise ValueError("structured backend requires a basis built from a theta matrix")
        chunks = []
        for _, K in structured_candidates(basis.theta.entries[None], basis.wp, basis.t_applied, reg):
            V = basis.embed(K)
            keep = reg.contains(V)
            chunks.append(K[keep])
        K = np.concatenate(chunks) if chunks else np.zeros((0, basis.d), dtype=np.int64)
    elif backend == "generic":
        scale = 1.0 / np.maximum(h, 1e-300)
        Bs = basis.columns * scale[:, None]
        K = enumerate_ball(Bs, math.sqrt(basis.d), include_zero=True)
        if len(K):
            K = K[reg.contains(basis.embed(K))]
    else:
        raise ValueError(f"unknown backend {backend!r}")
    nonzero = np.any(K != 0, axis=1)
    K = K[nonzero]
    if include_origin and reg.contains(np.zeros(basis.d)):
        K = np.concatenate([np.zeros((1, basis.d), dtype=np.int64), K])
    K = K[_sort_rows(K)]
    return K, basis.embed(K) if len(K) else np.zeros((0, basis.d))


# ---------------------------------------------------------------------------
# successive minima and alpha


@dataclass(frozen=True)
class MinimaResult:
    lambdas: np.ndarray
    witnesses: np.ndarray
    exact: bool = True


def _lll_sorted_norms(B: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    R, U = lll_reduce(B)
    norms = np.linalg.norm(R, axis=0)
    order = np.argsort(norms, kind="stable")
    return norms[order], U[:, order]


def successive_minima(basis: LatticeBasis, gauge_radius: float = 1.0, upto: int | None = None) -> MinimaResult:
    """Successive minima w.r.t. the Euclidean ball of radius ``gauge_radius``.

    Enumerates every lattice vector no longer than the ``upto``-th LLL basis
    vector (the LLL vectors are independent, so this radius bounds
    lambda_upto) and grows the span greedily in order of length.
    """
    d = basis.d
    if d > 6:
        raise UnsupportedDimensionError("successive minima are computed exactly only for d <= 6")
    upto = d if upto is None else upto
    norms, _ = _lll_sorted_norms(basis.columns)
    K = enumerate_ball(basis.columns, norms[upto - 1] * (1 + 1e-9))
    V = K @ basis.columns.T
    lens = np.linalg.norm(V, axis=1)
    order = np.lexsort(tuple(K.T[::-1]) + (np.round(lens, 12),))
    lam, wit = [], []
    Q = np.zeros((d, 0))
    for idx in order:
        v = V[idx]
        res = v - Q @ (Q.T @ v)
        if np.linalg.norm(res) > 1e-9 * lens[idx]:
            Q = np.column_stack([Q, res / np.linalg.norm(res)])
            lam.append(lens[idx] / gauge_radius)
            wit.append(K[idx])
            if len(lam) == upto:
                break
    return MinimaResult(np.array(lam), np.array(wit, dtype=np.int64), True)


@dataclass(frozen=True)
class AlphaResult:
    value: float
    best_rank: int
    best_subgroup_basis: np.ndarray
    exact: bool


def covolume(basis: LatticeBasis, K: np.ndarray) -> float:
    """Covolume of the subgroup generated by the independent coordinate rows ``K``."""
    V = np.atleast_2d(K) @ basis.columns.T
    return math.sqrt(max(np.linalg.det(V @ V.T), 0.0))


def _integer_span_basis(gens: np.ndarray) -> np.ndarray:
    """Basis (rows) of the Z-module generated by the integer rows ``gens``."""
    M = [list(map(int, r)) for r in gens]
    out = []
    ncol = len(M[0])
    col = 0
    while M and col < ncol:
        M = [r for r in M if any(r)]
        piv = [r for r in M if r[col] != 0]
        if not piv:
            col += 1
            continue
        while len([r for r in M if r[col] != 0]) > 1:
            nzr = sorted([r for r in M if r[col] != 0], key=lambda r: abs(r[col]))
            p = nzr[0]
            for r in nzr[1:]:
                f = r[col] // p[col]
                for c in range(ncol):
                    r[c] -= f * p[c]
        p = next(r for r in M if r[col] != 0)
        out.append(p)
        M = [r for r in M if r is not p]
        col += 1
    return np.array(out, dtype=np.int64)


def saturate(K: np.ndarray) -> np.ndarray:
    """Basis of ``Z^d ∩ span_R(K)`` for independent integer rows ``K``."""
    K = np.atleast_2d(np.asarray(K, dtype=np.int64))
    g = int(gcd_of_minors(K.T))
    if g == 1:
        return K
    j = len(K)
    if g ** j > 200000:
        raise RuntimeError("saturation index too large")
    gens = [r for r in K]
    for c in itertools.product(range(g), repeat=j):
        w = np.array(c, dtype=np.int64) @ K
        if np.all(w % g == 0) and np.any(w):
            gens.append(w // g)
    return _integer_span_basis(np.array(gens))


def _primitive_halfspace(K: np.ndarray) -> np.ndarray:
    g = np.gcd.reduce(np.abs(K), axis=1)
    first = K[np.arange(len(K)), np.argmax(K != 0, axis=1)]
    return K[(g == 1) & (first > 0)]


def _min_covolume_rank(basis: LatticeBasis, j: int, lambdas: np.ndarray, init_K: np.ndarray):
    """Minimal covolume over rank-j subgroups (exhaustive within a certified radius).

    A minimiser L' has j independent vectors of lengths mu_1 <= ... <= mu_j
    with mu_1...mu_j <= gamma_j covol(L'), gamma_j = 2^j / vol(unit j-ball)
    (Minkowski's second theorem), and mu_k >= lambda_k.  Hence every
    candidate vector has length <= gamma_j D / (lambda_1...lambda_{j-1})
    where D is the best covolume found so far; the search also enforces
    mu_k^(j-k+1) <= gamma_j D / (mu_1...mu_{k-1}).
    """
    B = basis.columns
    gamma = 2.0**j / ball_volume(j, 1.0)
    best_K = saturate(init_K)
    best = covolume(basis, best_K)
    rmax = gamma * best / float(np.prod(lambdas[: j - 1]))
    K = _primitive_halfspace(enumerate_ball(B, rmax * (1 + 1e-9)))
    V = K @ B.T
    lens = np.linalg.norm(V, axis=1)
    order = np.lexsort(tuple(K.T[::-1]) + (lens,))
    K, V, lens = K[order], V[order], lens[order]
    state = {"best": best, "K": best_K}

    def leaf(chosen: list[int], start: int, prod: float):
        bound = gamma * state["best"] / prod * (1 + 1e-9)
        stop = np.searchsorted(lens, bound, side="right")
        if stop <= start:
            return
        cand = np.arange(start, stop)
        W = np.concatenate(
            [np.broadcast_to(V[chosen], (cand.size, len(chosen), V.shape[1])), V[cand][:, None, :]], axis=1
        )
        G = np.einsum("cid,cjd->cij", W, W)
        det = np.linalg.det(G)
        prods2 = np.prod(np.einsum("cid,cid->ci", W, W), axis=1)
        KK = np.concatenate(
            [np.broadcast_to(K[chosen], (cand.size, len(chosen), K.shape[1])), K[cand][:, None, :]], axis=1
        )
        g = gcd_of_minors(np.swapaxes(KK, 1, 2))
        ok = (g > 0) & (det > 1e-18 * prods2)
        if not ok.any():
            return
        KK, det, g = KK[ok], det[ok], g[ok].astype(float)
        cov = np.sqrt(det) / g
        i = int(np.argmin(cov))
        if cov[i] < state["best"] * (1 - 1e-12):
            state["best"] = float(cov[i])
            state["K"] = saturate(KK[i])
            state["best"] = covolume(basis, state["K"])

    def rec(chosen: list[int], start: int, prod: float):
        k = len(chosen) + 1
        if k == j:
            leaf(chosen, start, prod)
            return
        for idx in range(start, len(K)):
            if lens[idx] ** (j - k + 1) > gamma * state["best"] / prod * (1 + 1e-9):
                break
            if chosen:
                W = V[chosen + [idx]]
                if np.linalg.matrix_rank(W, tol=1e-9 * lens[idx]) < k:
                    continue
            rec(chosen + [idx], idx + 1, prod * lens[idx])

    rec([], 0, 1.0)
    return state["best"], state["K"]


def alpha(basis: LatticeBasis, max_exact_dim: int = 4) -> AlphaResult:
    """``max {1/covol(L') : L' a nonzero subgroup}``, always >= 1.

    Exact (certified enumeration) for d <= ``max_exact_dim``; above that a
    lower bound from the rank-1 minimum and saturated LLL prefixes.
    """
    d = basis.d
    exact = d <= max_exact_dim
    _, U = _lll_sorted_norms(basis.columns)
    # ties go to the lowest rank
    if d <= 6:
        mins = successive_minima(basis, upto=1)
        best_val, best_rank, best_K = 1.0 / mins.lambdas[0], 1, mins.witnesses[:1]
    else:
        best_val, best_rank, best_K = 1.0 / covolume(basis, U[:, :1].T), 1, U[:, :1].T
    for j in range(2, d):
        init = U[:, :j].T
        if exact:
            lam = successive_minima(basis, upto=j - 1).lambdas
            cov, K = _min_covolume_rank(basis, j, lam, init)
        else:
            K = saturate(init)
            cov = covolume(basis, K)
        if 1.0 / cov > best_val * (1 + 1e-12):
            best_val, best_rank, best_K = 1.0 / cov, j, K
    if best_val < 1.0:
        best_val, best_rank, best_K = 1.0, d, np.eye(d, dtype=np.int64)
    return AlphaResult(float(best_val), int(best_rank), np.atleast_2d(best_K), exact)


def random_unimodular(d: int, rng: np.random.Generator, wp: WeightPair | None = None) -> LatticeBasis:
    """Gaussian matrix rescaled to determinant one (not Haar-distributed)."""
    while True:
        M = rng.standard_normal((d, d))
        det = np.linalg.det(M)
        if abs(det) > 1e-3:
            break
    if det < 0:
        M[:, 0] *= -1
        det = -det
    return LatticeBasis(M / det ** (1.0 / d), wp=wp)
