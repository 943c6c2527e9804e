"""Benchmark protocol, dataset runs and oracle-table experiments."""
from __future__ import annotations

import csv
import dataclasses
import io
import logging
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numba
import numpy as np

from wsdsr.blockmatch import build_match_table
from wsdsr.config import ParamSet, defaults
from wsdsr.driver import Profile, super_resolve, super_resolve_color
from wsdsr.errors import InvalidInputError
from wsdsr.image import MultiPlane, psnr, quantize8, read_png, rgb_to_ycbcr, trim_border, trim_to_multiple
from wsdsr.resample import ScaleSpec, downsample, up_shape, upsample
from wsdsr.wsd_filter import FilterState

log = logging.getLogger(__name__)

PROTOCOL = (
    "luma",
    "trim_to_multiple",
    "quantize_gt",
    "downsample",
    "quantize_lr",
    "solve",
    "quantize_sr",
    "trim_border",
    "psnr",
)

SOLVERS = ("wsdsr", "bicubic")


class SkipImage(Exception):
    pass


def configure_threads() -> None:
    """Honour ``SR_THREADS`` as a cap on numba worker threads."""
    raw = os.environ.get("SR_THREADS")
    if raw:
        numba.set_num_threads(max(1, min(int(raw), numba.config.NUMBA_NUM_THREADS)))


@dataclass
class ImageRecord:
    name: str
    psnr: float
    time_s: float
    K: int
    steps: tuple[str, ...] = field(default=(), repr=False)


@dataclass
class BenchmarkRun:
    dataset: str
    scale: float
    profile: str
    records: list[ImageRecord]
    skipped: list[tuple[str, str]] = field(default_factory=list)

    @property
    def infinite(self) -> list[str]:
        return [r.name for r in self.records if math.isinf(r.psnr)]

    @property
    def mean_psnr(self) -> float:
        vals = [r.psnr for r in self.records if not math.isinf(r.psnr)]
        return float(np.mean(vals)) if vals else math.nan

    @property
    def total_time(self) -> float:
        return float(sum(r.time_s for r in self.records))


def _planes(z_orig: np.ndarray) -> tuple[list[np.ndarray], bool]:
    """Luma first, then chroma for colour inputs."""
    img = MultiPlane.from_array(z_orig)
    if img.colorspace == "Gray":
        return img.planes, False
    return rgb_to_ycbcr(img).planes, True


def protocol_pair(z_orig: np.ndarray, s, *, quantize_gt: bool = True,
                  steps: list | None = None) -> tuple[list[np.ndarray], list[np.ndarray], bool]:
    """Ground-truth and LR planes after protocol steps 1-5.

    Returns ``(gt_planes, lr_planes, is_colour)``; the luma plane comes first.
    """
    log_step = steps.append if steps is not None else (lambda _: None)
    spec = ScaleSpec.of(s)
    planes, colour = _planes(z_orig)
    log_step("luma")
    planes = [trim_to_multiple(trim_to_multiple(p.T, spec.sx).T, spec.sy) for p in planes] \
        if spec.sx != spec.sy else [trim_to_multiple(p, spec.sx) for p in planes]
    log_step("trim_to_multiple")
    if quantize_gt:
        planes = [quantize8(p) for p in planes]
        log_step("quantize_gt")
    lr = [downsample(p, spec) for p in planes]
    log_step("downsample")
    lr = [quantize8(p) for p in lr]
    log_step("quantize_lr")
    return planes, lr, colour


def border_width(s) -> int:
    spec = ScaleSpec.of(s)
    return int(math.ceil(max(spec.sx, spec.sy)))


def _check_size(gt: np.ndarray, s, params: ParamSet) -> None:
    b = border_width(s)
    if min(gt.shape) < max(3 * b, params.ht.n1) or min(gt.shape) <= 2 * b:
        raise SkipImage(f"{gt.shape[1]}x{gt.shape[0]} too small for scale {s}")


def evaluate_image(
    z_orig: np.ndarray,
    s,
    profile: Profile | str = Profile.Y_ONLY,
    params: ParamSet | None = None,
    *,
    solver: str = "wsdsr",
    iterations: int | None = None,
    state: FilterState | None = None,
    name: str = "",
    return_output: bool = False,
):
    """Run the nine-step evaluation on one image and return its record."""
    if solver not in SOLVERS:
        raise InvalidInputError(f"unknown solver {solver!r}")
    profile = Profile(profile)
    spec = ScaleSpec.of(s)
    params = params or defaults(math.sqrt(spec.sx * spec.sy))
    steps: list[str] = []
    gt, lr, colour = protocol_pair(z_orig, spec, steps=steps)
    _check_size(gt[0], s, params)

    t0 = time.perf_counter()
    K = 0
    if solver == "bicubic":
        y = upsample(lr[0], spec, out_shape=gt[0].shape)
    elif profile is Profile.Y_ONLY or not colour:
        y, info = super_resolve(lr[0], spec, params, iterations=iterations, state=state,
                                return_info=True)
        K = info["K"]
    else:
        lr_img = MultiPlane(lr, "YCbCr")
        out, info = super_resolve_color(lr_img, spec, params, profile,
                                        iterations=iterations, return_info=True)
        y, K = out.planes[0], info["K"]
    elapsed = time.perf_counter() - t0
    steps.append("solve")
    if y.shape != gt[0].shape:
        raise InvalidInputError(f"solver output {y.shape} != ground truth {gt[0].shape}")

    y = quantize8(y)
    steps.append("quantize_sr")
    b = border_width(s)
    y_t, gt_t = trim_border(y, b), trim_border(gt[0], b)
    steps.append("trim_border")
    value = psnr(y_t, gt_t)
    steps.append("psnr")
    rec = ImageRecord(name, value, elapsed, K, tuple(steps))
    return (rec, y) if return_output else rec


def oracle_state(source: np.ndarray, lr_shape: tuple[int, int], s,
                 params: ParamSet) -> FilterState:
    """A frozen state whose tables were matched on ``source`` (an HR plane)."""
    want = up_shape(lr_shape, ScaleSpec.of(s))
    if tuple(source.shape) != tuple(want):
        raise InvalidInputError(f"oracle plane {source.shape} does not match HR grid {want}")
    st = FilterState(frozen=True)
    st.m_ht = build_match_table(source, params.ht)
    st.m_pilot = build_match_table(source, params.wiener)
    return st


def oracle_match_run(
    z_orig: np.ndarray,
    s,
    params: ParamSet | None = None,
    *,
    source: np.ndarray | None = None,
    iterations: int | None = None,
    name: str = "",
) -> ImageRecord:
    """Evaluate with match tables taken from the ground truth (or ``source``)."""
    spec = ScaleSpec.of(s)
    params = params or defaults(math.sqrt(spec.sx * spec.sy))
    gt, lr, _ = protocol_pair(z_orig, spec)
    src = gt[0] if source is None else np.asarray(source, dtype=np.float64)
    state = oracle_state(src, lr[0].shape, spec, params)
    return evaluate_image(z_orig, spec, Profile.Y_ONLY, params, iterations=iterations,
                          state=state, name=name)


# --- ablations ---------------------------------------------------------------

GLOBAL_RADIUS = 1 << 30


def apply_ablation(params: ParamSet, spec: str) -> ParamSet:
    """Apply one ``key=value`` ablation switch (reuse, search, wiener2d)."""
    key, _, value = spec.partition("=")
    key, value = key.strip(), value.strip()
    if key == "reuse":
        if value not in ("on", "off"):
            raise InvalidInputError(f"reuse ablation expects on/off, got {value!r}")
        return dataclasses.replace(params, reuse=value == "on")
    if key == "search":
        w = params.wiener
        if value == "global":
            w = dataclasses.replace(w, ns0=GLOBAL_RADIUS, ns_max=GLOBAL_RADIUS)
        elif value == "local":
            w = dataclasses.replace(w, ns_max=w.ns0)
        elif value != "incremental":
            raise InvalidInputError(f"search ablation expects global/local/incremental, got {value!r}")
        return dataclasses.replace(params, wiener=w)
    if key == "wiener2d":
        mapping = {"dct": "dct", "identity": "identity", "i": "identity"}
        if value not in mapping:
            raise InvalidInputError(f"wiener2d ablation expects dct/identity, got {value!r}")
        return dataclasses.replace(params, wiener_2d=mapping[value])
    raise InvalidInputError(f"unknown ablation {spec!r}")


# --- dataset runs ------------------------------------------------------------


MANIFEST = "manifest.txt"


def list_images(directory: str | Path) -> list[Path]:
    """PNG files of a dataset directory.

    If the directory has a ``manifest.txt`` (one file name per line), exactly
    those files are used, in that order, and a missing one is an error.
    """
    d = Path(directory)
    if not d.is_dir():
        raise InvalidInputError(f"{d} is not a directory")
    manifest = d / MANIFEST
    if manifest.exists():
        names = [ln.split("#", 1)[0].strip() for ln in manifest.read_text().splitlines()]
        files = [d / n for n in names if n]
        missing = [p.name for p in files if not p.exists()]
        if missing:
            raise InvalidInputError(f"{d}: files listed in {MANIFEST} are missing: {', '.join(missing)}")
    else:
        files = sorted(p for p in d.iterdir() if p.suffix.lower() == ".png")
    if not files:
        raise InvalidInputError(f"no PNG images in {d}")
    return files


def run_benchmark(
    directory: str | Path,
    s,
    profile: Profile | str = Profile.Y_ONLY,
    params: ParamSet | None = None,
    *,
    solver: str = "wsdsr",
    iterations: int | None = None,
    oracle_dir: str | Path | None = None,
    progress: bool = False,
) -> BenchmarkRun:
    spec = ScaleSpec.of(s)
    params = params or defaults(math.sqrt(spec.sx * spec.sy))
    profile = Profile(profile)
    run = BenchmarkRun(str(directory), float(s) if not isinstance(s, ScaleSpec) else s.sx,
                       profile.value, [])
    configure_threads()
    for path in list_images(directory):
        z = read_png(path)
        try:
            if oracle_dir is not None:
                gt_img = read_png(Path(oracle_dir) / path.name)
                gt, _, _ = protocol_pair(gt_img, spec)
                _, lr, _ = protocol_pair(z, spec)
                state = oracle_state(gt[0], lr[0].shape, spec, params)
                rec = evaluate_image(z, spec, Profile.Y_ONLY, params, iterations=iterations,
                                     state=state, name=path.stem)
            else:
                rec = evaluate_image(z, spec, profile, params, solver=solver,
                                     iterations=iterations, name=path.stem)
        except SkipImage as exc:
            log.warning("skipping %s: %s", path.name, exc)
            run.skipped.append((path.stem, str(exc)))
            continue
        if progress:
            print(f"  {rec.name:<16} {rec.psnr:7.3f} dB  K={rec.K:<4d} {rec.time_s:7.2f}s", flush=True)
        run.records.append(rec)
    if run.infinite:
        log.warning("infinite PSNR excluded from mean: %s", ", ".join(run.infinite))
    return run


def _fmt(v: float) -> str:
    return "inf" if math.isinf(v) else f"{v:.6f}"


def to_csv(run: BenchmarkRun) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["name", "psnr", "time", "K"])
    for r in run.records:
        w.writerow([r.name, _fmt(r.psnr), f"{r.time_s:.4f}", r.K])
    w.writerow(["mean", _fmt(run.mean_psnr), f"{run.total_time:.4f}", ""])
    return buf.getvalue()


def format_table(run: BenchmarkRun) -> str:
    lines = [
        f"dataset {run.dataset}  scale {run.scale:g}  profile {run.profile}",
        f"{'image':<16} {'PSNR (dB)':>10} {'K':>5} {'time (s)':>9}",
    ]
    for r in run.records:
        lines.append(f"{r.name:<16} {_fmt(r.psnr)[:10]:>10} {r.K:>5d} {r.time_s:>9.2f}")
    lines.append(f"{'mean':<16} {_fmt(run.mean_psnr)[:10]:>10} {'':>5} {run.total_time:>9.2f}")
    if run.infinite:
        lines.append("excluded (infinite PSNR): " + ", ".join(run.infinite))
    for name, why in run.skipped:
        lines.append(f"skipped {name}: {why}")
    return "\n".join(lines)
