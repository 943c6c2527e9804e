"""The WSD regularizer: hard-thresholded pilot plus a Wiener filter that acts
only along the patch-similarity dimension.

Match tables and the pilot estimate live in a :class:`FilterState` that the
driver threads through its iterations, so block matching runs sparsely.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from wsdsr.blockmatch import MatchTable, build_match_table
from wsdsr.config import ParamSet
from wsdsr.errors import InvalidInputError
from wsdsr import kernels
from wsdsr.transforms import (
    dct2_forward,
    dct2_inverse,
    dct_matrix,
    haar1_forward,
    haar1_inverse,
)


@dataclass
class Counters:
    block_matches: int = 0
    groups_filtered: int = 0


def _cover(table: MatchTable) -> np.ndarray:
    cover = np.zeros(table.shape)
    kernels.coverage(table.origins, table.counts, table.n1, cover)
    if np.any(cover == 0):
        raise AssertionError("match table leaves pixels uncovered")
    return cover


def group(plane: np.ndarray, table: MatchTable) -> list[np.ndarray]:
    """One ``(m, n1, n1)`` stack per reference, patches in table order."""
    n1 = table.n1
    out = []
    for r in range(len(table)):
        n = int(table.counts[r])
        out.append(np.stack([plane[i : i + n1, j : j + n1] for i, j in table.origins[r, :n]]))
    return out


def aggregate(groups: list[np.ndarray], table: MatchTable, dims: tuple[int, int]) -> np.ndarray:
    """Put every patch back at its origin and average overlapping estimates."""
    n1 = table.n1
    acc = np.zeros(dims)
    cnt = np.zeros(dims)
    for r, g in enumerate(groups):
        for (i, j), patch in zip(table.origins[r, : len(g)], g):
            acc[i : i + n1, j : j + n1] += patch
            cnt[i : i + n1, j : j + n1] += 1
    if np.any(cnt == 0):
        raise AssertionError("aggregation left pixels uncovered")
    return acc / cnt


def hard_threshold_3d(group: np.ndarray, tau: float, *, group_scaled: bool = False) -> np.ndarray:
    """Zero 3-D (DCT x Haar) coefficients with magnitude below the threshold.

    The threshold is ``tau``, or ``tau * sqrt(m)`` for an ``m``-patch group
    when ``group_scaled``. The all-DC coefficient is always kept.
    """
    spec = haar1_forward(dct2_forward(group))
    dc = spec[..., 0, 0, 0].copy()
    thr = tau * np.sqrt(group.shape[-3]) if group_scaled else tau
    spec[np.abs(spec) < thr] = 0.0
    spec[..., 0, 0, 0] = dc
    return dct2_inverse(haar1_inverse(spec))


def _wiener_spectrum(group: np.ndarray, dct: bool) -> np.ndarray:
    return haar1_forward(dct2_forward(group) if dct else group)


def _wiener_synthesis(spec: np.ndarray, dct: bool) -> np.ndarray:
    out = haar1_inverse(spec)
    return dct2_inverse(out) if dct else out


def _gain(power: np.ndarray, tau: float, keep_dc: bool, dct: bool) -> np.ndarray:
    den = power + tau * tau
    with np.errstate(invalid="ignore", divide="ignore"):
        w = np.where(den > 0, power / np.where(den > 0, den, 1.0), 0.0)
    if keep_dc:
        if dct:
            w[..., 0, 0, 0] = 1.0
        else:
            w[..., 0, :, :] = 1.0
    return w


def estimate_wiener(pilot_group: np.ndarray, tau: float, *, dct: bool = False,
                    keep_dc: bool = True) -> np.ndarray:
    """Empirical Wiener gains ``G^2 / (G^2 + tau^2)`` from the pilot spectrum.

    ``G`` is the Haar spectrum along the similarity axis (after a 2-D DCT
    when ``dct``). With ``keep_dc`` the similarity-DC gains are pinned to 1.
    """
    G = _wiener_spectrum(pilot_group, dct)
    return _gain(G * G, tau, keep_dc, dct)


def wiener_filter(group: np.ndarray, w: np.ndarray, *, dct: bool = False) -> np.ndarray:
    if group.shape != w.shape:
        raise InvalidInputError(f"group shape {group.shape} != weights shape {w.shape}")
    return _wiener_synthesis(w * _wiener_spectrum(group, dct), dct)


@dataclass
class FilterState:
    """Match tables and pilot carried from one ``wsd`` call to the next.

    ``frozen`` tables (oracle mode) are never recomputed.
    """

    m_ht: MatchTable | None = None
    m_pilot: MatchTable | None = None
    pilot: np.ndarray | None = None
    last_pilot_iteration: int = -1
    frozen: bool = False
    counters: Counters = field(default_factory=Counters)
    _ht_cover: np.ndarray | None = field(default=None, repr=False)
    _pilot_cover: np.ndarray | None = field(default=None, repr=False)
    _pilot_power: list | None = field(default=None, repr=False)

    def set_ht(self, table: MatchTable) -> None:
        self.m_ht = table
        self._ht_cover = _cover(table)

    def set_pilot_table(self, table: MatchTable) -> None:
        self.m_pilot = table
        self._pilot_cover = _cover(table)


def _default_guide(xs: np.ndarray) -> np.ndarray:
    return xs[0]


def wsd(
    x: np.ndarray,
    tau: float,
    k: int,
    state: FilterState | None,
    params: ParamSet,
    guide: Callable[[np.ndarray], np.ndarray] | None = None,
) -> tuple[np.ndarray, FilterState]:
    """One WSD pass on ``x`` at iteration ``k``.

    ``x`` is a plane or a ``(C, H, W)`` stack. Block matching always runs on
    ``guide(stack)`` (default: first channel); filtering is per channel.
    """
    state = state if state is not None else FilterState()
    guide = guide or _default_guide
    xs = x[None] if x.ndim == 2 else x
    h, w = xs.shape[1:]
    if h < params.ht.n1 or w < params.ht.n1:
        raise InvalidInputError(f"plane {w}x{h} smaller than HT block {params.ht.n1}")
    dct = params.wiener_2d == "dct"

    if not state.frozen and (state.m_ht is None or k == 0 or not params.reuse):
        state.set_ht(build_match_table(guide(xs), params.ht))
        state.counters.block_matches += 1
    elif state._ht_cover is None:
        state.set_ht(state.m_ht)

    refresh = (
        state.pilot is None
        or k % params.glob.k_pilot == 0
        or not params.reuse
    )
    if refresh:
        t = state.m_ht
        c_ht = dct_matrix(t.n1)
        pilot = np.empty_like(xs)
        for c in range(len(xs)):
            acc = np.zeros((h, w))
            kernels.ht_filter(np.ascontiguousarray(xs[c]), t.origins, t.counts, t.n1,
                              float(tau), c_ht, acc, params.ht_threshold == "group")
            pilot[c] = acc / state._ht_cover
        state.counters.groups_filtered += len(t) * len(xs)
        state.pilot = pilot
        state.last_pilot_iteration = k
        if not state.frozen or state.m_pilot is None:
            state.set_pilot_table(build_match_table(guide(pilot), params.wiener))
            state.counters.block_matches += 1
        elif state._pilot_cover is None:
            state.set_pilot_table(state.m_pilot)
        t = state.m_pilot
        state._pilot_power = []
        for c in range(len(xs)):
            power = np.zeros(t.origins.shape[:2] + (t.n1, t.n1))
            kernels.spectrum_power(pilot[c], t.origins, t.counts, t.n1, dct,
                                   dct_matrix(t.n1), power)
            state._pilot_power.append(power)

    t = state.m_pilot
    out = np.empty_like(xs)
    for c in range(len(xs)):
        acc = np.zeros((h, w))
        kernels.wiener_apply(np.ascontiguousarray(xs[c]), t.origins, t.counts, t.n1, dct,
                             dct_matrix(t.n1), state._pilot_power[c], float(tau), True, acc)
        out[c] = acc / state._pilot_cover
    state.counters.groups_filtered += len(t) * len(xs)
    return (out[0] if x.ndim == 2 else out), state
