# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled discrepancy kernels.

Same surface as the pure-NumPy backend (warnock_value, warnock_value_grad,
star_2d, star_nd), with compensated summation in the Warnock pair loop and
subset-filtered grid recursion for the exact star discrepancy.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


cdef inline double _kahan_add(double val, double* acc, double* comp) noexcept:
    cdef double y = val - comp[0]
    cdef double t = acc[0] + y
    comp[0] = (t - acc[0]) - y
    acc[0] = t
    return t


def warnock_value(const double[:, ::1] x):
    """Squared L2 discrepancy; pair term computed once per unordered pair."""
    cdef Py_ssize_t n = x.shape[0], d = x.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double prod, mx
    cdef double acc1 = 0.0, c1 = 0.0, acc2 = 0.0, c2 = 0.0
    for i in range(n):
        prod = 1.0
        for k in range(d):
            prod *= (1.0 - x[i, k] * x[i, k]) * 0.5
        _kahan_add(prod, &acc1, &c1)
    for i in range(n):
        prod = 1.0
        for k in range(d):
            prod *= 1.0 - x[i, k]
        _kahan_add(prod, &acc2, &c2)
        for j in range(i + 1, n):
            prod = 2.0
            for k in range(d):
                mx = x[i, k] if x[i, k] > x[j, k] else x[j, k]
                prod *= 1.0 - mx
            _kahan_add(prod, &acc2, &c2)
    cdef double val = (1.0 / 3.0) ** d - (2.0 / n) * acc1 + acc2 / (<double> n * <double> n)
    return max(val, 0.0)


def warnock_value_grad(const double[:, ::1] x):
    """Value and analytic gradient; max ties split 50/50 between the points."""
    cdef Py_ssize_t n = x.shape[0], d = x.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double acc1 = 0.0, c1 = 0.0, acc2 = 0.0, c2 = 0.0
    cdef double qk, qex
    cdef double inv_n2 = 1.0 / (<double> n * <double> n)
    grad_arr = np.zeros((n, d), dtype=np.float64)
    pref_arr = np.empty(d + 1, dtype=np.float64)
    suf_arr = np.empty(d + 1, dtype=np.float64)
    cdef double[:, ::1] grad = grad_arr
    cdef double[::1] pref = pref_arr
    cdef double[::1] suf = suf_arr

    for i in range(n):
        pref[0] = 1.0
        for k in range(d):
            pref[k + 1] = pref[k] * (1.0 - x[i, k] * x[i, k]) * 0.5
        suf[d] = 1.0
        for k in range(d - 1, -1, -1):
            suf[k] = suf[k + 1] * (1.0 - x[i, k] * x[i, k]) * 0.5
        _kahan_add(pref[d], &acc1, &c1)
        for k in range(d):
            grad[i, k] += (2.0 / n) * x[i, k] * pref[k] * suf[k + 1]

    for i in range(n):
        pref[0] = 1.0
        for k in range(d):
            pref[k + 1] = pref[k] * (1.0 - x[i, k])
        suf[d] = 1.0
        for k in range(d - 1, -1, -1):
            suf[k] = suf[k + 1] * (1.0 - x[i, k])
        _kahan_add(pref[d], &acc2, &c2)
        for k in range(d):
            grad[i, k] -= inv_n2 * pref[k] * suf[k + 1]
        for j in range(i + 1, n):
            pref[0] = 1.0
            for k in range(d):
                qk = 1.0 - (x[i, k] if x[i, k] > x[j, k] else x[j, k])
                pref[k + 1] = pref[k] * qk
            suf[d] = 1.0
            for k in range(d - 1, -1, -1):
                qk = 1.0 - (x[i, k] if x[i, k] > x[j, k] else x[j, k])
                suf[k] = suf[k + 1] * qk
            _kahan_add(2.0 * pref[d], &acc2, &c2)
            for k in range(d):
                qex = pref[k] * suf[k + 1]
                if x[i, k] > x[j, k]:
                    grad[i, k] -= 2.0 * inv_n2 * qex
                elif x[i, k] < x[j, k]:
                    grad[j, k] -= 2.0 * inv_n2 * qex
                else:
                    grad[i, k] -= inv_n2 * qex
                    grad[j, k] -= inv_n2 * qex

    cdef double val = (1.0 / 3.0) ** d - (2.0 / n) * acc1 + acc2 * inv_n2
    return max(val, 0.0), grad_arr


def star_2d(const double[:, ::1] x):
    """Exact two-dimensional star discrepancy: slab sweep over the critical grid."""
    cdef Py_ssize_t n = x.shape[0]
    xs_arr = np.ascontiguousarray(x[:, 0])
    ys_arr = np.ascontiguousarray(x[:, 1])
    tx_arr = np.unique(np.concatenate([xs_arr, [1.0]]))
    ty_arr = np.unique(np.concatenate([ys_arr, [1.0]]))
    order_arr = np.argsort(xs_arr, kind="stable").astype(np.int64)
    yrc_arr = np.searchsorted(ty_arr, ys_arr).astype(np.int64)
    yro_arr = np.searchsorted(ty_arr, ys_arr, side="right").astype(np.int64)

    cdef const double[::1] xs = xs_arr
    cdef const double[::1] tx = tx_arr
    cdef const double[::1] ty = ty_arr
    cdef long[::1] order = order_arr
    cdef long[::1] yrc = yrc_arr
    cdef long[::1] yro = yro_arr
    cdef Py_ssize_t nx = tx_arr.shape[0], ny = ty_arr.shape[0]

    chist_arr = np.zeros(ny + 1, dtype=np.int64)
    ohist_arr = np.zeros(ny + 1, dtype=np.int64)
    cdef long[::1] chist = chist_arr
    cdef long[::1] ohist = ohist_arr

    cdef Py_ssize_t a, b, pc = 0, po = 0
    cdef long cc, oc
    cdef double vol, t, best = -1.0, wx = 1.0, wy = 1.0, cand
    for a in range(nx):
        t = tx[a]
        while po < n and xs[order[po]] < t:
            ohist[yro[order[po]]] += 1
            po += 1
        while pc < n and xs[order[pc]] <= t:
            chist[yrc[order[pc]]] += 1
            pc += 1
        cc = 0
        oc = 0
        for b in range(ny):
            cc += chist[b]
            oc += ohist[b]
            vol = t * ty[b]
            cand = cc / (<double> n) - vol
            if vol - oc / (<double> n) > cand:
                cand = vol - oc / (<double> n)
            if cand > best:
                best = cand
                wx = t
                wy = ty[b]
    return best, np.array([wx, wy])


cdef void _star_rec(
    const double[::1] flat_t, const long[::1] offs, const double[:, ::1] x,
    Py_ssize_t k, Py_ssize_t d, Py_ssize_t ncl, Py_ssize_t nop,
    int[:, ::1] cbuf, int[:, ::1] obuf, double vol,
    double[::1] best, double[::1] corner, double[::1] best_corner,
    Py_ssize_t n,
) noexcept:
    cdef double over, under, cand, t
    cdef Py_ssize_t ti, i, ncl2, nop2
    cdef int idx
    if ncl / (<double> n) <= best[0] and vol <= best[0]:
        return
    if k == d:
        over = ncl / (<double> n) - vol
        under = vol - nop / (<double> n)
        cand = over if over > under else under
        if cand > best[0]:
            best[0] = cand
            best_corner[:] = corner
        return
    for ti in range(offs[k + 1] - 1, offs[k] - 1, -1):
        t = flat_t[ti]
        ncl2 = 0
        for i in range(ncl):
            idx = cbuf[k, i]
            if x[idx, k] <= t:
                cbuf[k + 1, ncl2] = idx
                ncl2 += 1
        nop2 = 0
        for i in range(nop):
            idx = obuf[k, i]
            if x[idx, k] < t:
                obuf[k + 1, nop2] = idx
                nop2 += 1
        corner[k] = t
        _star_rec(flat_t, offs, x, k + 1, d, ncl2, nop2, cbuf, obuf,
                  vol * t, best, corner, best_corner, n)


def star_nd(const double[:, ::1] x):
    """Exact star discrepancy in general dimension by pruned grid recursion."""
    cdef Py_ssize_t n = x.shape[0], d = x.shape[1]
    thresholds = [np.unique(np.concatenate([np.asarray(x[:, k]), [1.0]])) for k in range(d)]
    flat_arr = np.ascontiguousarray(np.concatenate(thresholds))
    offs_arr = np.zeros(d + 1, dtype=np.int64)
    offs_arr[1:] = np.cumsum([len(t) for t in thresholds])
    cbuf_arr = np.empty((d + 1, n), dtype=np.int32)
    obuf_arr = np.empty((d + 1, n), dtype=np.int32)
    cbuf_arr[0] = np.arange(n, dtype=np.int32)
    obuf_arr[0] = np.arange(n, dtype=np.int32)
    best_arr = np.array([-1.0])
    corner_arr = np.ones(d)
    best_corner_arr = np.ones(d)

    cdef double[::1] flat_t = flat_arr
    cdef long[::1] offs = offs_arr
    cdef int[:, ::1] cbuf = cbuf_arr
    cdef int[:, ::1] obuf = obuf_arr
    cdef double[::1] best = best_arr
    cdef double[::1] corner = corner_arr
    cdef double[::1] best_corner = best_corner_arr

    _star_rec(flat_t, offs, x, 0, d, n, n, cbuf, obuf, 1.0,
              best, corner, best_corner, n)
    return float(best_arr[0]), best_corner_arr
