"""Orthonormal block transforms acting on patch groups.

Groups are arrays shaped ``(..., m, n1, n1)``: the similarity dimension is
axis ``-3`` and every patch occupies the last two axes.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from wsdsr.config import is_pow2
from wsdsr.errors import InvalidInputError

_SQRT_HALF = np.sqrt(0.5)


@lru_cache(maxsize=64)
def dct_matrix(n: int) -> np.ndarray:
    """Orthonormal DCT-II matrix; row ``k`` is the ``k``-th basis vector."""
    k = np.arange(n)[:, None]
    i = np.arange(n)[None, :]
    c = np.cos(np.pi * (2 * i + 1) * k / (2 * n)) * np.sqrt(2.0 / n)
    c[0] /= np.sqrt(2.0)
    c.setflags(write=False)
    return c


def dct2_forward(group: np.ndarray) -> np.ndarray:
    c = dct_matrix(group.shape[-1])
    return c @ group @ c.T


def dct2_inverse(group: np.ndarray) -> np.ndarray:
    c = dct_matrix(group.shape[-1])
    return c.T @ group @ c


def _check_len(m: int) -> None:
    if not is_pow2(m):
        raise InvalidInputError(f"Haar transform needs a power-of-two length, got {m}")


def haar1_forward(group: np.ndarray, axis: int = -3) -> np.ndarray:
    """Full multilevel orthonormal Haar transform along ``axis``.

    Output order is ``[approximation, coarsest detail, ..., finest details]``.
    """
    x = np.moveaxis(np.asarray(group, dtype=np.float64), axis, 0)
    m = x.shape[0]
    _check_len(m)
    out = np.empty_like(x)
    n = m
    cur = x
    while n > 1:
        even, odd = cur[0::2], cur[1::2]
        half = n // 2
        out[half:n] = (even - odd) * _SQRT_HALF
        cur = (even + odd) * _SQRT_HALF
        n = half
    out[0] = cur[0]
    return np.moveaxis(out, 0, axis)


def haar1_inverse(spec: np.ndarray, axis: int = -3) -> np.ndarray:
    s = np.moveaxis(np.asarray(spec, dtype=np.float64), axis, 0)
    m = s.shape[0]
    _check_len(m)
    cur = s[0:1]
    n = 1
    while n < m:
        detail = s[n : 2 * n]
        nxt = np.empty((2 * n,) + s.shape[1:])
        nxt[0::2] = (cur + detail) * _SQRT_HALF
        nxt[1::2] = (cur - detail) * _SQRT_HALF
        cur = nxt
        n *= 2
    return np.moveaxis(cur.copy() if m == 1 else cur, 0, axis)
