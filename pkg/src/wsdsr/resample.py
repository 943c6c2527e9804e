"""Separable cubic resampling: the sampling operator H and up-sampler U."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from wsdsr.errors import InvalidInputError

KEYS_A = -0.5


@dataclass(frozen=True)
class ScaleSpec:
    """Scale factor per axis; ``ScaleSpec.of(s)`` for isotropic scaling."""

    sy: float
    sx: float

    @classmethod
    def of(cls, s: "float | ScaleSpec") -> "ScaleSpec":
        if isinstance(s, ScaleSpec):
            return s
        return cls(float(s), float(s))

    def __post_init__(self):
        for v in (self.sy, self.sx):
            if not (math.isfinite(v) and v > 0):
                raise InvalidInputError(f"invalid scale factor {v}")


def cubic(x: np.ndarray, a: float = KEYS_A) -> np.ndarray:
    """Keys cubic convolution kernel."""
    ax = np.abs(x)
    ax2 = ax * ax
    ax3 = ax2 * ax
    near = (a + 2.0) * ax3 - (a + 3.0) * ax2 + 1.0
    far = a * ax3 - 5.0 * a * ax2 + 8.0 * a * ax - 4.0 * a
    return np.where(ax <= 1.0, near, np.where(ax < 2.0, far, 0.0))


def _round_half_up(v: float) -> int:
    return int(math.floor(v + 0.5))


@lru_cache(maxsize=256)
def contributions(n_in: int, n_out: int, scale: float, antialias: bool):
    """Tap indices and normalised weights, both shaped ``(n_out, taps)``.

    ``scale`` is input samples per output sample. Output ``u`` sits at input
    coordinate ``(u + 0.5) * scale - 0.5``. With ``antialias`` and
    ``scale > 1`` the kernel is stretched by ``scale``.
    """
    stretch = scale if (antialias and scale > 1.0) else 1.0
    width = 4.0 * stretch
    centre = (np.arange(n_out) + 0.5) * scale - 0.5
    left = np.floor(centre - width / 2.0).astype(np.int64)
    taps = int(math.ceil(width)) + 2
    idx = left[:, None] + np.arange(taps)[None, :]
    w = cubic((centre[:, None] - idx) / stretch)
    w = w / w.sum(axis=1, keepdims=True)
    idx = np.clip(idx, 0, n_in - 1)
    idx.setflags(write=False)
    w.setflags(write=False)
    return idx, w


def _apply_axis0(p: np.ndarray, idx: np.ndarray, w: np.ndarray) -> np.ndarray:
    # p[idx] has shape (n_out, taps, ...)
    return np.einsum("ot,ot...->o...", w, p[idx])


def resize(p: np.ndarray, out_shape: tuple[int, int], scale: ScaleSpec,
           antialias: bool) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    h, w = p.shape
    oh, ow = out_shape
    iy, wy = contributions(h, oh, scale.sy, antialias)
    ix, wx = contributions(w, ow, scale.sx, antialias)
    tmp = _apply_axis0(p, iy, wy)
    return _apply_axis0(tmp.T, ix, wx).T.copy()


def down_shape(shape: tuple[int, int], spec: "float | ScaleSpec") -> tuple[int, int]:
    spec = ScaleSpec.of(spec)
    return _round_half_up(shape[0] / spec.sy), _round_half_up(shape[1] / spec.sx)


def up_shape(shape: tuple[int, int], spec: "float | ScaleSpec") -> tuple[int, int]:
    spec = ScaleSpec.of(spec)
    return _round_half_up(shape[0] * spec.sy), _round_half_up(shape[1] * spec.sx)


def downsample(p: np.ndarray, spec: "float | ScaleSpec", out_shape=None) -> np.ndarray:
    """Bicubic decimation by ``spec`` with an anti-aliasing stretch (operator H)."""
    spec = ScaleSpec.of(spec)
    out_shape = out_shape or down_shape(p.shape, spec)
    if out_shape[0] < 1 or out_shape[1] < 1:
        raise InvalidInputError(f"downsampled size {out_shape} is empty")
    return resize(p, out_shape, spec, antialias=True)


def upsample(p: np.ndarray, spec: "float | ScaleSpec", out_shape=None) -> np.ndarray:
    """Bicubic interpolation by ``spec`` (operator U)."""
    spec = ScaleSpec.of(spec)
    out_shape = out_shape or up_shape(p.shape, spec)
    inv = ScaleSpec(1.0 / spec.sy, 1.0 / spec.sx)
    return resize(p, out_shape, inv, antialias=False)
