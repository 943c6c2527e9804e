"""Plane/colour helpers and the metric used by the benchmark protocol.

A *plane* is a 2-D ``float64`` array indexed ``[row, col]`` holding
intensities on the nominal 0..255 scale.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from wsdsr.errors import InvalidInputError

# Returned by psnr() when the two planes are identical.
PSNR_INF = math.inf

_STUDIO = np.array(
    [
        [65.481, 128.553, 24.966],
        [-37.797, -74.203, 112.0],
        [112.0, -93.786, -18.214],
    ]
) / 255.0
_STUDIO_OFFSET = np.array([16.0, 128.0, 128.0])

_FULL = np.array(
    [
        [0.299, 0.587, 0.114],
        [-0.168736, -0.331264, 0.5],
        [0.5, -0.418688, -0.081312],
    ]
)
_FULL_OFFSET = np.array([0.0, 128.0, 128.0])

COLORSPACES = ("Gray", "RGB", "YCbCr")


@dataclass
class MultiPlane:
    """Same-sized planes plus a colour-space tag (Gray, RGB or YCbCr)."""

    planes: list[np.ndarray]
    colorspace: str = "Gray"
    studio: bool = field(default=True, repr=False)

    def __post_init__(self):
        if self.colorspace not in COLORSPACES:
            raise InvalidInputError(f"unknown colorspace {self.colorspace!r}")
        want = 1 if self.colorspace == "Gray" else 3
        if len(self.planes) != want:
            raise InvalidInputError(
                f"{self.colorspace} needs {want} plane(s), got {len(self.planes)}"
            )
        self.planes = [np.asarray(p, dtype=np.float64) for p in self.planes]
        shape = self.planes[0].shape
        if any(p.shape != shape for p in self.planes):
            raise InvalidInputError("planes must share dimensions")

    @property
    def shape(self) -> tuple[int, int]:
        return self.planes[0].shape

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "MultiPlane":
        """Wrap an ``HxW`` (Gray) or ``HxWx3`` (RGB) array."""
        arr = np.asarray(arr, dtype=np.float64)
        if arr.ndim == 2:
            return cls([arr], "Gray")
        if arr.ndim == 3 and arr.shape[2] >= 3:
            return cls([arr[..., c] for c in range(3)], "RGB")
        raise InvalidInputError(f"cannot interpret array of shape {arr.shape}")

    def to_array(self) -> np.ndarray:
        if self.colorspace == "Gray":
            return self.planes[0].copy()
        return np.stack(self.planes, axis=-1)


def _matrix(studio: bool) -> tuple[np.ndarray, np.ndarray]:
    return (_STUDIO, _STUDIO_OFFSET) if studio else (_FULL, _FULL_OFFSET)


def rgb_to_ycbcr(img: MultiPlane, studio: bool = True) -> MultiPlane:
    """BT.601 RGB -> YCbCr. ``studio=True`` maps Y to [16, 235]."""
    if img.colorspace != "RGB":
        raise InvalidInputError(f"expected RGB input, got {img.colorspace}")
    m, off = _matrix(studio)
    rgb = np.stack(img.planes, axis=-1)
    ycc = rgb @ m.T + off
    return MultiPlane([ycc[..., c] for c in range(3)], "YCbCr", studio=studio)


def ycbcr_to_rgb(img: MultiPlane, clamp: bool = True) -> MultiPlane:
    if img.colorspace != "YCbCr":
        raise InvalidInputError(f"expected YCbCr input, got {img.colorspace}")
    m, off = _matrix(img.studio)
    ycc = np.stack(img.planes, axis=-1)
    rgb = (ycc - off) @ np.linalg.inv(m).T
    if clamp:
        rgb = np.clip(rgb, 0.0, 255.0)
    return MultiPlane([rgb[..., c] for c in range(3)], "RGB")


def luma(rgb: np.ndarray, studio: bool = True) -> np.ndarray:
    """Y of a ``(3, H, W)`` RGB stack."""
    m, off = _matrix(studio)
    return np.tensordot(m[0], rgb, axes=1) + off[0]


def quantize8(p: np.ndarray) -> np.ndarray:
    """Clamp to [0, 255] and round half away from zero."""
    p = np.clip(np.asarray(p, dtype=np.float64), 0.0, 255.0)
    return np.floor(p + 0.5)


def _fits(n: int, s: float) -> bool:
    q = n / s
    return abs(q - round(q)) < 1e-9 and round(q) >= 1


def trimmed_size(n: int, s: float) -> int:
    """Largest n' <= n with n'/s integral, or ``n`` when none exists."""
    if float(s).is_integer():
        k = n // int(s)
        return k * int(s) if k >= 1 else n
    for cand in range(n, 0, -1):
        if _fits(cand, s):
            return cand
    return n


def trim_to_multiple(p: np.ndarray, s: float) -> np.ndarray:
    """Drop right columns / bottom rows so both sides are multiples of ``s``."""
    if s < 1:
        raise InvalidInputError(f"scale must be >= 1, got {s}")
    h, w = p.shape[:2]
    return p[: trimmed_size(h, s), : trimmed_size(w, s)].copy()


def trim_border(p: np.ndarray, b: int) -> np.ndarray:
    b = int(b)
    h, w = p.shape[:2]
    if b < 0 or h <= 2 * b or w <= 2 * b:
        raise InvalidInputError(f"border {b} too large for {w}x{h} plane")
    return p[b : h - b, b : w - b].copy()


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """PSNR in dB for an 8-bit peak; ``PSNR_INF`` for identical planes."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise InvalidInputError(f"shape mismatch {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return PSNR_INF
    return 10.0 * math.log10(255.0**2 / mse)


# --- I/O --------------------------------------------------------------------


def read_png(path: str | Path) -> np.ndarray:
    """Load an 8-bit image as float64 ``HxW`` or ``HxWx3`` (alpha dropped)."""
    with Image.open(path) as im:
        if im.mode in ("L", "LA", "1"):
            return np.asarray(im.convert("L"), dtype=np.float64)
        arr = np.asarray(im.convert("RGB"), dtype=np.float64)
    if np.array_equal(arr[..., 0], arr[..., 1]) and np.array_equal(arr[..., 1], arr[..., 2]):
        return arr[..., 0].copy()
    return arr


def write_png(path: str | Path, arr: np.ndarray) -> None:
    data = quantize8(arr).astype(np.uint8)
    Image.fromarray(data).save(path)


def dump_plane(p: np.ndarray) -> str:
    """Plain-text dump: width, height, then row-major values at full precision."""
    h, w = p.shape
    vals = " ".join(repr(float(v)) for v in p.ravel())
    return f"{w} {h}\n{vals}\n"


def load_plane(text: str) -> np.ndarray:
    tok = text.split()
    w, h = int(tok[0]), int(tok[1])
    vals = np.array([float(t) for t in tok[2:]], dtype=np.float64)
    if vals.size != w * h:
        raise InvalidInputError(f"expected {w * h} values, found {vals.size}")
    return vals.reshape(h, w)
