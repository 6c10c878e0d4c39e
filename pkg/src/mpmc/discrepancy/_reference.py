"""Pure-NumPy discrepancy kernels.

Fallback backend with the same surface as the compiled extension:
``warnock_value``, ``warnock_value_grad``, ``star_2d``, ``star_nd``.
Row chunking keeps the O(N^2 d) pairwise intermediates bounded.
"""

from __future__ import annotations

import numpy as np

# pairwise intermediates capped at ~2^24 float64 entries per chunk
_CHUNK_ELEMS = 1 << 24


def _pair_chunk_rows(n: int, d: int) -> int:
    return max(1, _CHUNK_ELEMS // max(1, n * d))


def warnock_value(x: np.ndarray) -> float:
    """Squared L2 discrepancy by the closed-form point/pair sums."""
    n, d = x.shape
    single = np.prod((1.0 - x * x) * 0.5, axis=1)
    pair_total = 0.0
    rows = _pair_chunk_rows(n, d)
    for lo in range(0, n, rows):
        hi = min(lo + rows, n)
        m = np.maximum(x[lo:hi, None, :], x[None, :, :])
        pair_total += float(np.prod(1.0 - m, axis=2).sum())
    val = (1.0 / 3.0) ** d - (2.0 / n) * float(single.sum()) + pair_total / (float(n) * n)
    return max(val, 0.0)


def _excl_products(a: np.ndarray) -> np.ndarray:
    """prod over the last axis excluding each entry, division-free."""
    shape = a.shape[:-1] + (1,)
    ones = np.ones(shape, dtype=a.dtype)
    pref = np.cumprod(np.concatenate([ones, a], axis=-1), axis=-1)[..., :-1]
    suf = np.cumprod(np.concatenate([ones, a[..., ::-1]], axis=-1), axis=-1)[..., :-1][..., ::-1]
    return pref * suf


def warnock_value_grad(x: np.ndarray):
    """Value plus d(value)/dx; max ties split 50/50 between the two points."""
    n, d = x.shape
    half = (1.0 - x * x) * 0.5
    single = np.prod(half, axis=1)
    grad = (2.0 / n) * x * _excl_products(half)

    pair_total = 0.0
    rows = _pair_chunk_rows(n, d)
    inv_n2 = 1.0 / (float(n) * n)
    for lo in range(0, n, rows):
        hi = min(lo + rows, n)
        xi = x[lo:hi, None, :]
        xj = x[None, :, :]
        q = 1.0 - np.maximum(xi, xj)
        pair_total += float(np.prod(q, axis=2).sum())
        qexcl = _excl_products(q)
        w = (xi > xj) + 0.5 * (xi == xj)
        grad[lo:hi] -= 2.0 * inv_n2 * np.einsum("ijk,ijk->ik", w, qexcl)
    val = (1.0 / 3.0) ** d - (2.0 / n) * float(single.sum()) + pair_total * inv_n2
    return max(val, 0.0), grad


def star_2d(x: np.ndarray):
    """Exact two-dimensional star discrepancy over the critical grid.

    Cumulative 2-D histograms give closed (<=) and open (<) box counts for
    every grid corner at once; O(N^2) time and memory.
    """
    n = x.shape[0]
    xs, ys = x[:, 0], x[:, 1]
    tx = np.unique(np.concatenate([xs, [1.0]]))
    ty = np.unique(np.concatenate([ys, [1.0]]))
    nx, ny = len(tx), len(ty)

    hist = np.zeros((nx, ny))
    np.add.at(hist, (np.searchsorted(tx, xs), np.searchsorted(ty, ys)), 1.0)
    closed = hist.cumsum(axis=0).cumsum(axis=1)

    hist = np.zeros((nx + 1, ny + 1))
    ixo = np.searchsorted(tx, xs, side="right")
    iyo = np.searchsorted(ty, ys, side="right")
    np.add.at(hist, (ixo, iyo), 1.0)
    opened = hist.cumsum(axis=0).cumsum(axis=1)[:nx, :ny]

    vol = tx[:, None] * ty[None, :]
    over = closed / n - vol
    under = vol - opened / n
    cand = np.maximum(over, under)
    flat = int(np.argmax(cand))
    a, b = divmod(flat, ny)
    return float(cand[a, b]), np.array([tx[a], ty[b]])


def star_nd(x: np.ndarray):
    """Exact star discrepancy for general dimension by grid recursion.

    Walks the critical grid one coordinate at a time, filtering the
    surviving point subsets, and prunes subtrees whose closed-count and
    volume bounds cannot beat the running maximum.
    """
    n, d = x.shape
    thresholds = [np.unique(np.concatenate([x[:, k], [1.0]])) for k in range(d)]
    best_val = -1.0
    best_corner = np.ones(d)
    corner = np.ones(d)
    all_idx = np.arange(n)

    def recurse(k, closed_idx, open_idx, vol):
        nonlocal best_val, best_corner
        if closed_idx.size / n <= best_val and vol <= best_val:
            return
        if k == d:
            over = closed_idx.size / n - vol
            under = vol - open_idx.size / n
            cand = over if over > under else under
            if cand > best_val:
                best_val = cand
                best_corner = corner.copy()
            return
        col_closed = x[closed_idx, k]
        col_open = x[open_idx, k]
        for t in thresholds[k][::-1]:
            corner[k] = t
            recurse(
                k + 1,
                closed_idx[col_closed <= t],
                open_idx[col_open < t],
                vol * t,
            )

    recurse(0, all_idx, all_idx, 1.0)
    return float(best_val), best_corner
