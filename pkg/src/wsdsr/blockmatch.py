"""Reference grids, block matching and match tables."""
from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from wsdsr.config import StageParams
from wsdsr.errors import InvalidInputError


def grid_positions(n: int, n1: int, step: int) -> np.ndarray:
    if n < n1:
        raise InvalidInputError(f"plane side {n} smaller than block size {n1}")
    pos = list(range(0, n - n1 + 1, step))
    if pos[-1] != n - n1:
        pos.append(n - n1)
    return np.asarray(pos, dtype=np.int64)


def reference_grid(dims: tuple[int, int], n1: int, n_step: int) -> np.ndarray:
    """Reference block origins as an ``(R, 2)`` array in raster order.

    The last row/column is clamped flush with the border so the blocks
    cover the whole plane.
    """
    rows = grid_positions(dims[0], n1, n_step)
    cols = grid_positions(dims[1], n1, n_step)
    rr, cc = np.meshgrid(rows, cols, indexing="ij")
    return np.stack([rr.ravel(), cc.ravel()], axis=1)


@dataclass
class MatchTable:
    """Per reference block, the matched origins sorted by distance.

    ``origins[r, :counts[r]]`` and ``dists[r, :counts[r]]`` are valid; the
    padding holds ``-1`` and ``inf``.
    """

    refs: np.ndarray
    origins: np.ndarray
    dists: np.ndarray
    counts: np.ndarray
    n1: int
    shape: tuple[int, int]

    def __len__(self) -> int:
        return len(self.refs)

    def entries(self, r: int) -> list[tuple[tuple[int, int], float]]:
        n = int(self.counts[r])
        return [((int(i), int(j)), float(d))
                for (i, j), d in zip(self.origins[r, :n], self.dists[r, :n])]

    def same_matches(self, other: "MatchTable") -> bool:
        return (
            self.shape == tuple(other.shape)
            and self.n1 == other.n1
            and np.array_equal(self.refs, other.refs)
            and np.array_equal(self.counts, other.counts)
            and all(
                np.array_equal(self.origins[r, :n], other.origins[r, :n])
                for r, n in enumerate(self.counts)
            )
        )

    def check(self, n2: int | None = None) -> None:
        """Raise ``AssertionError`` if a table invariant is broken."""
        h, w = self.shape
        for r in range(len(self)):
            n = int(self.counts[r])
            assert n >= 1 and (n & (n - 1)) == 0, f"ref {r}: length {n} not a power of two"
            if n2 is not None:
                assert n <= n2
            o = self.origins[r, :n]
            d = self.dists[r, :n]
            assert tuple(o[0]) == tuple(self.refs[r]) and d[0] == 0.0
            assert np.all(np.diff(d[1:]) >= 0) and np.all(d >= 0)
            assert np.all(o >= 0) and np.all(o[:, 0] <= h - self.n1) and np.all(o[:, 1] <= w - self.n1)

    def to_text(self) -> str:
        """One line per reference: ``ri rj`` followed by ``i j d`` triples."""
        lines = [f"# n1={self.n1} n2={self.origins.shape[1]} height={self.shape[0]} width={self.shape[1]}"]
        for r in range(len(self)):
            parts = [f"{self.refs[r, 0]} {self.refs[r, 1]}"]
            parts += [f"{i} {j} {d!r}" for (i, j), d in self.entries(r)]
            lines.append(" ".join(parts))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "MatchTable":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        head = dict(kv.split("=") for kv in lines[0].lstrip("# ").split())
        n1, shape = int(head["n1"]), (int(head["height"]), int(head["width"]))
        rows = [ln.split() for ln in lines[1:]]
        width = max([int(head.get("n2", 1))] + [(len(t) - 2) // 3 for t in rows])
        R = len(rows)
        refs = np.zeros((R, 2), np.int64)
        origins = np.full((R, width, 2), -1, np.int64)
        dists = np.full((R, width), np.inf)
        counts = np.zeros(R, np.int64)
        for r, tok in enumerate(rows):
            refs[r] = int(tok[0]), int(tok[1])
            trip = tok[2:]
            n = len(trip) // 3
            counts[r] = n
            for e in range(n):
                origins[r, e] = int(trip[3 * e]), int(trip[3 * e + 1])
                dists[r, e] = float(trip[3 * e + 2])
        return cls(refs, origins, dists, counts, n1, shape)


@numba.njit(cache=True)
def _match_one(plane, ri, rj, n1, n2, ns0, ns_max, thr, out_o, out_d):
    h, w = plane.shape
    hmax = h - n1
    wmax = w - n1
    npix = n1 * n1
    limit = thr * npix * (1.0 + 1e-9)
    r = ns0
    while True:
        i0 = max(0, ri - r)
        i1 = min(hmax, ri + r)
        j0 = max(0, rj - r)
        j1 = min(wmax, rj + r)
        ncand = (i1 - i0 + 1) * (j1 - j0 + 1)
        cd = np.empty(ncand)
        ci = np.empty(ncand, np.int64)
        cj = np.empty(ncand, np.int64)
        cnt = 0
        for i in range(i0, i1 + 1):
            for j in range(j0, j1 + 1):
                if i == ri and j == rj:
                    continue
                s = 0.0
                for a in range(n1):
                    for b in range(n1):
                        d = plane[ri + a, rj + b] - plane[i + a, j + b]
                        s += d * d
                    if s > limit:
                        break
                dist = s / npix
                if dist <= thr:
                    cd[cnt] = dist
                    ci[cnt] = i
                    cj[cnt] = j
                    cnt += 1
        if cnt + 1 >= n2 or r >= ns_max:
            break
        r = min(max(2 * r, 1), ns_max)
    order = np.argsort(cd[:cnt], kind="mergesort")
    take = min(cnt, n2 - 1) + 1
    p = 1
    while p * 2 <= take:
        p *= 2
    out_o[0, 0] = ri
    out_o[0, 1] = rj
    out_d[0] = 0.0
    for e in range(1, p):
        k = order[e - 1]
        out_o[e, 0] = ci[k]
        out_o[e, 1] = cj[k]
        out_d[e] = cd[k]
    return p


@numba.njit(cache=True)
def _block_means(plane, n1):
    h, w = plane.shape
    ii = np.zeros((h + 1, w + 1))
    for i in range(h):
        for j in range(w):
            ii[i + 1, j + 1] = plane[i, j] + ii[i, j + 1] + ii[i + 1, j] - ii[i, j]
    out = np.empty((h - n1 + 1, w - n1 + 1))
    for i in range(h - n1 + 1):
        for j in range(w - n1 + 1):
            out[i, j] = (ii[i + n1, j + n1] - ii[i, j + n1] - ii[i + n1, j] + ii[i, j]) / (n1 * n1)
    return out


@numba.njit(cache=True)
def _match_one_global(plane, means, ri, rj, n1, n2, thr, seed, out_o, out_d):
    """Whole-plane search returning the same matches as an exhaustive scan.

    Candidates near the reference are scored first; afterwards a candidate is
    skipped once its block-mean lower bound or partial sum exceeds the current
    ``n2 - 1``-th best distance.
    """
    h, w = plane.shape
    hmax = h - n1
    wmax = w - n1
    npix = n1 * n1
    keep = n2 - 1
    hd = np.full(max(keep, 1), np.inf)
    nh = 0
    cap = 4 * (2 * seed + 1) ** 2 + 16 * n2
    cd = np.empty(cap)
    ck = np.empty(cap, np.int64)
    cnt = 0
    bound = thr
    mu = means[ri, rj]
    i0 = max(0, ri - seed)
    i1 = min(hmax, ri + seed)
    j0 = max(0, rj - seed)
    j1 = min(wmax, rj + seed)
    for phase in range(2):
        for i in range(hmax + 1):
            for j in range(wmax + 1):
                inside = i0 <= i <= i1 and j0 <= j <= j1
                if (phase == 0) != inside or (i == ri and j == rj):
                    continue
                dm = means[i, j] - mu
                # absolute slack covers rounding in the integral-image means
                if dm * dm > bound * (1.0 + 1e-9) + 1e-6:
                    continue
                limit = bound * npix * (1.0 + 1e-9)
                s = 0.0
                for a in range(n1):
                    for b in range(n1):
                        d = plane[ri + a, rj + b] - plane[i + a, j + b]
                        s += d * d
                    if s > limit:
                        break
                dist = s / npix
                if dist > bound or keep == 0:
                    continue
                if cnt == cap:
                    cap *= 2
                    cd2 = np.empty(cap)
                    ck2 = np.empty(cap, np.int64)
                    cd2[:cnt] = cd[:cnt]
                    ck2[:cnt] = ck[:cnt]
                    cd = cd2
                    ck = ck2
                cd[cnt] = dist
                ck[cnt] = i * w + j
                cnt += 1
                # running max-heap of the best ``keep`` distances, kept as a flat array
                if nh < keep:
                    hd[nh] = dist
                    nh += 1
                else:
                    worst = 0
                    for t in range(1, keep):
                        if hd[t] > hd[worst]:
                            worst = t
                    if dist < hd[worst]:
                        hd[worst] = dist
                if nh == keep:
                    top = hd[0]
                    for t in range(1, keep):
                        top = max(top, hd[t])
                    bound = min(thr, top)
    # raster order first, then a stable sort by distance
    by_pos = np.argsort(ck[:cnt], kind="mergesort")
    d_pos = cd[:cnt][by_pos]
    order = by_pos[np.argsort(d_pos, kind="mergesort")]
    take = min(cnt, keep) + 1
    p = 1
    while p * 2 <= take:
        p *= 2
    out_o[0, 0] = ri
    out_o[0, 1] = rj
    out_d[0] = 0.0
    for e in range(1, p):
        k = order[e - 1]
        out_o[e, 0] = ck[k] // w
        out_o[e, 1] = ck[k] % w
        out_d[e] = cd[k]
    return p


@numba.njit(cache=True, parallel=True)
def _match_all(plane, refs, n1, n2, ns0, ns_max, thr, origins, dists, counts):
    h, w = plane.shape
    if ns0 >= max(h, w):
        means = _block_means(plane, n1)
        for r in numba.prange(refs.shape[0]):
            counts[r] = _match_one_global(plane, means, refs[r, 0], refs[r, 1], n1, n2,
                                          thr, 12, origins[r], dists[r])
        return
    for r in numba.prange(refs.shape[0]):
        counts[r] = _match_one(plane, refs[r, 0], refs[r, 1], n1, n2, ns0, ns_max,
                               thr, origins[r], dists[r])


def _match(plane: np.ndarray, refs: np.ndarray, params: StageParams) -> MatchTable:
    plane = np.ascontiguousarray(plane, dtype=np.float64)
    if not np.all(np.isfinite(plane)):
        raise InvalidInputError("plane contains non-finite values")
    refs = np.ascontiguousarray(refs, dtype=np.int64).reshape(-1, 2)
    R = len(refs)
    origins = np.full((R, params.n2, 2), -1, np.int64)
    dists = np.full((R, params.n2), np.inf)
    counts = np.zeros(R, np.int64)
    _match_all(plane, refs, params.n1, params.n2, params.ns0, params.ns_max,
               float(params.match_threshold), origins, dists, counts)
    return MatchTable(refs, origins, dists, counts, params.n1, plane.shape)


def block_match(plane: np.ndarray, ref: tuple[int, int], params: StageParams):
    """Match list for one reference block as ``[((row, col), dist), ...]``."""
    h, w = plane.shape
    if not (0 <= ref[0] <= h - params.n1 and 0 <= ref[1] <= w - params.n1):
        raise InvalidInputError(f"reference {ref} out of bounds")
    return _match(plane, np.array([ref]), params).entries(0)


def build_match_table(plane: np.ndarray, params: StageParams) -> MatchTable:
    refs = reference_grid(plane.shape, params.n1, params.n_step)
    return _match(plane, refs, params)
