"""Low-dimensional lattice reduction and short-vector enumeration.

Bases are stored column-wise: lattice point = ``B @ k`` for integer ``k``.
"""
from __future__ import annotations

import math

import numpy as np


def lll_reduce(B: np.ndarray, delta: float = 0.99) -> tuple[np.ndarray, np.ndarray]:
    """LLL-reduce the columns of ``B``.

    Returns ``(R, U)`` with ``R = B @ U`` and ``U`` unimodular (integer).
    Floating-point Gram-Schmidt, adequate for d <= 8.
    """
    B = np.array(B, dtype=float)
    d = B.shape[1]
    U = np.eye(d, dtype=np.int64)
    b = [B[:, i].copy() for i in range(d)]
    u = [U[:, i].copy() for i in range(d)]

    def gso():
        bs, mu = [], np.zeros((d, d))
        for i in range(d):
            v = b[i].copy()
            for j in range(i):
                mu[i, j] = b[i] @ bs[j] / (bs[j] @ bs[j])
                v = v - mu[i, j] * bs[j]
            bs.append(v)
        return bs, mu

    bs, mu = gso()
    k = 1
    guard = 0
    while k < d:
        guard += 1
        if guard > 100000:
            raise RuntimeError("LLL did not terminate")
        for j in range(k - 1, -1, -1):
            q = round(mu[k, j])
            if q:
                b[k] = b[k] - q * b[j]
                u[k] = u[k] - q * u[j]
                bs, mu = gso()
        if bs[k] @ bs[k] >= (delta - mu[k, k - 1] ** 2) * (bs[k - 1] @ bs[k - 1]):
            k += 1
        else:
            b[k], b[k - 1] = b[k - 1], b[k]
            u[k], u[k - 1] = u[k - 1], u[k]
            bs, mu = gso()
            k = max(k - 1, 1)
    return np.column_stack(b), np.column_stack(u)


def enumerate_ball(B: np.ndarray, radius: float, include_zero: bool = False) -> np.ndarray:
    """All integer ``k`` with ``|B @ k| <= radius`` (Fincke-Pohst on an LLL basis).

    The innermost coordinate is enumerated as a vectorised range, so long
    thin ellipsoids are cheap.
    """
    B = np.asarray(B, dtype=float)
    d = B.shape[1]
    R, U = lll_reduce(B)
    # QR with positive diagonal; |R k| = |Q r k|
    _, Rt = np.linalg.qr(R)
    sgn = np.sign(np.diag(Rt))
    sgn[sgn == 0] = 1
    Rt = Rt * sgn[:, None]
    r2 = radius * radius * (1 + 1e-12) + 1e-300
    out: list[np.ndarray] = []
    z = np.zeros(d, dtype=np.int64)

    def rec(i: int, rem: float):
        # coordinates z[i+1:] fixed
        c = -(Rt[i, i + 1 :] @ z[i + 1 :]) / Rt[i, i]
        half = math.sqrt(max(rem, 0.0)) / abs(Rt[i, i])
        lo = math.ceil(c - half - 1e-9)
        hi = math.floor(c + half + 1e-9)
        if lo > hi:
            return
        if i == 0:
            vals = np.arange(lo, hi + 1, dtype=np.int64)
            rows = np.zeros((vals.size, d), dtype=np.int64)
            rows[:, 1:] = z[1:]
            rows[:, 0] = vals
            out.append(rows)
            return
        for zi in range(lo, hi + 1):
            z[i] = zi
            partial = Rt[i, i] * (zi - c)
            rec(i - 1, rem - partial * partial)
        z[i] = 0

    rec(d - 1, r2)
    if not out:
        return np.zeros((0, d), dtype=np.int64)
    Z = np.concatenate(out)
    K = Z @ U.T
    V = K @ B.T
    norms2 = np.einsum("ij,ij->i", V, V)
    keep = norms2 <= radius * radius * (1 + 1e-12)
    if not include_zero:
        keep &= np.any(K != 0, axis=1)
    return K[keep]


def gcd_of_minors(K: np.ndarray) -> np.ndarray:
    """GCD of the maximal minors of integer matrices ``K`` of shape (..., d, j).

    Equals the index of the lattice spanned by the columns inside its
    saturation ``Z^d ∩ span``.
    """
    from itertools import combinations

    K = np.asarray(K)
    d, j = K.shape[-2], K.shape[-1]
    g = None
    for rows in combinations(range(d), j):
        sub = K[..., list(rows), :]
        det = _int_det(sub)
        g = np.abs(det) if g is None else np.gcd(g, det)
    return g


def _int_det(M: np.ndarray) -> np.ndarray:
    j = M.shape[-1]
    if j == 1:
        return M[..., 0, 0]
    if j == 2:
        return M[..., 0, 0] * M[..., 1, 1] - M[..., 0, 1] * M[..., 1, 0]
    total = 0
    for c in range(j):
        minor = np.delete(np.delete(M, 0, axis=-2), c, axis=-1)
        total = total + (-1) ** c * M[..., 0, c] * _int_det(minor)
    return total
