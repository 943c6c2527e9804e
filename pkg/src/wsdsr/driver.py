"""Iterative back-projection driven by the WSD regularizer."""
from __future__ import annotations

import enum
import logging
import math
from typing import Callable

import numpy as np

from wsdsr.config import GlobalParams, ParamSet, defaults
from wsdsr.errors import InvalidInputError
from wsdsr.image import MultiPlane, luma, rgb_to_ycbcr, ycbcr_to_rgb
from wsdsr.resample import ScaleSpec, downsample, up_shape, upsample
from wsdsr.wsd_filter import FilterState, wsd

log = logging.getLogger(__name__)


class Profile(enum.Enum):
    Y_ONLY = "y"
    Y_YCBCR = "y-ycbcr"
    Y_RGB = "y-rgb"


def tau_schedule(k: int, K: int, s: float, gp: GlobalParams) -> float:
    """Filter strength at iteration ``k`` of ``K``: a quadratic decay to ``gamma_s * s``."""
    if K <= 0:
        raise InvalidInputError(f"iteration count must be positive, got {K}")
    if not 0 <= k <= K:
        raise InvalidInputError(f"iteration {k} outside [0, {K}]")
    return gp.gamma_k * ((K - k) / K) ** 2 + gp.gamma_s * s


def _scale_of(s) -> float:
    spec = ScaleSpec.of(s)
    return math.sqrt(spec.sx * spec.sy)


def round_trip_residual(y: np.ndarray, s) -> float:
    """Mean squared LR residual ``||y - H U y||^2 / m``."""
    hu = downsample(upsample(y, s), s, out_shape=y.shape)
    return float(np.mean((y - hu) ** 2))


def iteration_count(y: np.ndarray, s, gp: GlobalParams) -> int:
    if y.size == 0:
        raise InvalidInputError("empty input")
    K = math.floor(gp.beta1 * round_trip_residual(y, s) + gp.beta0 + 0.5)
    return int(min(max(K, gp.beta0), gp.k_max))


Callback = Callable[[int, np.ndarray, np.ndarray], None]


def _solve(ys: np.ndarray, s, params: ParamSet, guide, iterations: int | None,
           state: FilterState | None, callback: Callback | None,
           K_from: np.ndarray) -> tuple[np.ndarray, FilterState, int]:
    spec = ScaleSpec.of(s)
    lr_shape = ys.shape[1:]
    hr_shape = up_shape(lr_shape, spec)
    if min(hr_shape) < params.ht.n1:
        raise InvalidInputError(
            f"output {hr_shape} smaller than one HT block ({params.ht.n1})"
        )
    K = iterations if iterations is not None else iteration_count(K_from, spec, params.glob)
    if K < 1:
        raise InvalidInputError(f"iteration count must be >= 1, got {K}")
    alpha = params.glob.alpha
    s_eff = _scale_of(spec)

    def up(p):
        return upsample(p, spec, out_shape=hr_shape)

    def down(p):
        return downsample(p, spec, out_shape=lr_shape)

    state = state if state is not None else FilterState()
    x = np.stack([up(y) for y in ys])
    for k in range(1, K + 1):
        tau = tau_schedule(k, K, s_eff, params.glob)
        xt, state = wsd(x, tau, k - 1, state, params, guide=guide)
        x = np.stack([xt[c] + alpha * up(ys[c] - down(xt[c])) for c in range(len(ys))])
        if callback is not None:
            callback(k, xt, x)
    return x, state, K


def super_resolve(
    y: np.ndarray,
    s,
    params: ParamSet | None = None,
    *,
    iterations: int | None = None,
    state: FilterState | None = None,
    callback: Callback | None = None,
    return_info: bool = False,
):
    """Super-resolve plane ``y`` by factor ``s``.

    ``iterations`` overrides the residual-based iteration count. A
    pre-populated ``state`` (e.g. frozen oracle tables) is used as given.
    ``callback(k, filtered, estimate)`` runs after every iteration.
    """
    y = np.asarray(y, dtype=np.float64)
    params = params or defaults(_scale_of(s))
    cb = None
    if callback is not None:
        def cb(k, xt, x):
            callback(k, xt[0], x[0])
    x, state, K = _solve(y[None], s, params, None, iterations, state, cb, y)
    if return_info:
        return x[0], {"K": K, "state": state}
    return x[0]


def _to_ycbcr(img: MultiPlane) -> MultiPlane:
    return img if img.colorspace == "YCbCr" else rgb_to_ycbcr(img)


def super_resolve_color(
    img: MultiPlane,
    s,
    params: ParamSet | None = None,
    profile: Profile | str = Profile.Y_ONLY,
    *,
    iterations: int | None = None,
    return_info: bool = False,
):
    """Colour-aware super-resolution; colour results come back as YCbCr.

    ``Y_ONLY`` solves luma and interpolates chroma bicubically. The other
    profiles match blocks on luma and filter every channel of YCbCr or RGB.
    """
    profile = Profile(profile)
    params = params or defaults(_scale_of(s))
    if img.colorspace == "Gray":
        if profile is not Profile.Y_ONLY:
            log.warning("grayscale input: profile %s falls back to luma only", profile.value)
        x, info = super_resolve(img.planes[0], s, params, iterations=iterations,
                                return_info=True)
        out = MultiPlane([x], "Gray")
        return (out, info) if return_info else out

    ycc = _to_ycbcr(img)
    y_lr = ycc.planes[0]
    if profile is Profile.Y_ONLY:
        x, info = super_resolve(y_lr, s, params, iterations=iterations, return_info=True)
        spec = ScaleSpec.of(s)
        chroma = [upsample(p, spec, out_shape=x.shape) for p in ycc.planes[1:]]
        out = MultiPlane([x] + chroma, "YCbCr", studio=ycc.studio)
        return (out, info) if return_info else out

    if profile is Profile.Y_YCBCR:
        ys = np.stack(ycc.planes)

        def guide(stack):
            return stack[0]

        xs, state, K = _solve(ys, s, params, guide, iterations, None, None, y_lr)
        out = MultiPlane(list(xs), "YCbCr", studio=ycc.studio)
    else:
        rgb = ycbcr_to_rgb(ycc, clamp=False) if img.colorspace == "YCbCr" else img
        ys = np.stack(rgb.planes)

        def guide(stack):
            return luma(stack, ycc.studio)

        xs, state, K = _solve(ys, s, params, guide, iterations, None, None, y_lr)
        out = rgb_to_ycbcr(MultiPlane(list(xs), "RGB"), studio=ycc.studio)
    info = {"K": K, "state": state}
    return (out, info) if return_info else out
