"""Fused numba kernels for collaborative filtering over a match table.

Each kernel walks the table group by group: gather patches, transform,
shrink, invert, accumulate into a flat sum image. Accumulation is serial so
results do not depend on the thread count.
"""
import numba
import numpy as np

_S = np.sqrt(0.5)


@numba.njit(cache=True)
def _haar_fwd(buf, tmp, m):
    n = m
    while n > 1:
        half = n // 2
        for i in range(half):
            a = buf[2 * i]
            b = buf[2 * i + 1]
            tmp[i] = (a + b) * _S
            tmp[half + i] = (a - b) * _S
        for i in range(n):
            buf[i] = tmp[i]
        n = half


@numba.njit(cache=True)
def _haar_inv(buf, tmp, m):
    n = 1
    while n < m:
        for i in range(n):
            a = buf[i]
            d = buf[n + i]
            tmp[2 * i] = (a + d) * _S
            tmp[2 * i + 1] = (a - d) * _S
        for i in range(2 * n):
            buf[i] = tmp[i]
        n *= 2


@numba.njit(cache=True)
def _dct2(p, C, work, inverse):
    # p <- C p C^T (forward) or C^T p C (inverse), in place
    n1 = p.shape[0]
    for i in range(n1):
        for j in range(n1):
            s = 0.0
            for k in range(n1):
                if inverse:
                    s += C[k, i] * p[k, j]
                else:
                    s += C[i, k] * p[k, j]
            work[i, j] = s
    for i in range(n1):
        for j in range(n1):
            s = 0.0
            for k in range(n1):
                if inverse:
                    s += work[i, k] * C[k, j]
                else:
                    s += work[i, k] * C[j, k]
            p[i, j] = s


@numba.njit(cache=True)
def _spectrum(x, orig, m, n1, use_dct, C, g, fib, tmp, work):
    """Gather ``m`` patches into ``g`` and take the (DCT x) Haar spectrum."""
    for e in range(m):
        oi = orig[e, 0]
        oj = orig[e, 1]
        for a in range(n1):
            for b in range(n1):
                g[e, a, b] = x[oi + a, oj + b]
        if use_dct:
            _dct2(g[e], C, work, False)
    if m > 1:
        for a in range(n1):
            for b in range(n1):
                for e in range(m):
                    fib[e] = g[e, a, b]
                _haar_fwd(fib, tmp, m)
                for e in range(m):
                    g[e, a, b] = fib[e]


@numba.njit(cache=True)
def _synth_add(g, orig, m, n1, use_dct, C, acc, fib, tmp, work):
    if m > 1:
        for a in range(n1):
            for b in range(n1):
                for e in range(m):
                    fib[e] = g[e, a, b]
                _haar_inv(fib, tmp, m)
                for e in range(m):
                    g[e, a, b] = fib[e]
    for e in range(m):
        if use_dct:
            _dct2(g[e], C, work, True)
        oi = orig[e, 0]
        oj = orig[e, 1]
        for a in range(n1):
            for b in range(n1):
                acc[oi + a, oj + b] += g[e, a, b]


@numba.njit(cache=True)
def ht_filter(x, origins, counts, n1, tau, C, acc, group_scaled):
    n2 = origins.shape[1]
    g = np.empty((n2, n1, n1))
    fib = np.empty(n2)
    tmp = np.empty(n2)
    work = np.empty((n1, n1))
    for r in range(origins.shape[0]):
        m = counts[r]
        _spectrum(x, origins[r], m, n1, True, C, g, fib, tmp, work)
        thr = tau * np.sqrt(m) if group_scaled else tau
        dc = g[0, 0, 0]
        for e in range(m):
            for a in range(n1):
                for b in range(n1):
                    if abs(g[e, a, b]) < thr:
                        g[e, a, b] = 0.0
        g[0, 0, 0] = dc
        _synth_add(g, origins[r], m, n1, True, C, acc, fib, tmp, work)


@numba.njit(cache=True)
def spectrum_power(x, origins, counts, n1, use_dct, C, power):
    n2 = origins.shape[1]
    g = np.empty((n2, n1, n1))
    fib = np.empty(n2)
    tmp = np.empty(n2)
    work = np.empty((n1, n1))
    for r in range(origins.shape[0]):
        m = counts[r]
        _spectrum(x, origins[r], m, n1, use_dct, C, g, fib, tmp, work)
        for e in range(m):
            for a in range(n1):
                for b in range(n1):
                    power[r, e, a, b] = g[e, a, b] * g[e, a, b]


@numba.njit(cache=True)
def wiener_apply(x, origins, counts, n1, use_dct, C, power, tau, keep_dc, acc):
    n2 = origins.shape[1]
    tau2 = tau * tau
    g = np.empty((n2, n1, n1))
    fib = np.empty(n2)
    tmp = np.empty(n2)
    work = np.empty((n1, n1))
    for r in range(origins.shape[0]):
        m = counts[r]
        _spectrum(x, origins[r], m, n1, use_dct, C, g, fib, tmp, work)
        for e in range(m):
            for a in range(n1):
                for b in range(n1):
                    if keep_dc and e == 0 and (not use_dct or (a == 0 and b == 0)):
                        continue
                    p = power[r, e, a, b]
                    den = p + tau2
                    g[e, a, b] *= p / den if den > 0.0 else 0.0
        _synth_add(g, origins[r], m, n1, use_dct, C, acc, fib, tmp, work)


@numba.njit(cache=True)
def coverage(origins, counts, n1, cover):
    for r in range(origins.shape[0]):
        for e in range(counts[r]):
            oi = origins[r, e, 0]
            oj = origins[r, e, 1]
            for a in range(n1):
                for b in range(n1):
                    cover[oi + a, oj + b] += 1.0
