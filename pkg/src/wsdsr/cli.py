"""``sr`` command line: upscale, bench, psnr."""
from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from wsdsr import harness
from wsdsr.config import load_overrides, serialize
from wsdsr.driver import Profile, super_resolve, super_resolve_color
from wsdsr.errors import InvalidInputError
from wsdsr.image import MultiPlane, luma, psnr, quantize8, read_png, trim_border, ycbcr_to_rgb, write_png


def _scale(text: str) -> float:
    try:
        s = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid scale {text!r}") from None
    if not (math.isfinite(s) and s > 1):
        raise argparse.ArgumentTypeError(f"scale must be > 1, got {text}")
    return s


def _positive(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return n


def _params(args):
    ps = load_overrides(args.config, args.scale)
    for a in getattr(args, "ablation", None) or []:
        ps = harness.apply_ablation(ps, a)
    return ps


def cmd_upscale(args) -> int:
    params = _params(args)
    if args.dump_config:
        sys.stdout.write(serialize(params))
        return 0
    if args.output is None:
        raise InvalidInputError("upscale needs -o OUTPUT")
    harness.configure_threads()
    img = MultiPlane.from_array(read_png(args.input))
    profile = Profile(args.profile)
    if img.colorspace == "Gray":
        out = super_resolve(img.planes[0], args.scale, params, iterations=args.iterations)
        write_png(args.output, quantize8(out))
        return 0
    res = super_resolve_color(img, args.scale, params, profile, iterations=args.iterations)
    write_png(args.output, quantize8(ycbcr_to_rgb(res).to_array()))
    return 0


def cmd_bench(args) -> int:
    params = _params(args)
    if args.dump_config:
        sys.stdout.write(serialize(params))
        return 0
    if args.csv is None:
        raise InvalidInputError("bench needs --csv OUT")
    run = harness.run_benchmark(
        args.dir, args.scale, args.profile, params,
        solver=args.solver, iterations=args.iterations,
        oracle_dir=args.oracle_gt, progress=not args.quiet,
    )
    Path(args.csv).write_text(harness.to_csv(run))
    print(harness.format_table(run))
    return 0


def _luma_of(arr: np.ndarray) -> np.ndarray:
    return arr if arr.ndim == 2 else luma(np.moveaxis(arr, -1, 0))


def cmd_psnr(args) -> int:
    a, b = _luma_of(read_png(args.a)), _luma_of(read_png(args.b))
    if a.shape != b.shape:
        raise InvalidInputError(f"size mismatch: {a.shape} vs {b.shape}")
    if args.trim:
        a, b = trim_border(a, args.trim), trim_border(b, args.trim)
    value = psnr(a, b)
    print("inf" if math.isinf(value) else f"{value:.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sr", description="Iterative back-projection super-resolution.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    up = sub.add_parser("upscale", help="super-resolve one PNG")
    up.add_argument("input")
    up.add_argument("--scale", type=_scale, required=True, help="magnification factor s > 1")
    up.add_argument("--profile", choices=[m.value for m in Profile], default="y",
                    help="colour handling (default: y)")
    up.add_argument("--iterations", type=_positive, metavar="K",
                    help="force K iterations instead of the residual heuristic")
    up.add_argument("--config", metavar="FILE", help="key=value parameter overrides")
    up.add_argument("--dump-config", action="store_true", help="print effective parameters and exit")
    up.add_argument("-o", "--output", help="output PNG")
    up.set_defaults(func=cmd_upscale)

    be = sub.add_parser("bench", help="evaluate every PNG in a directory")
    be.add_argument("dir")
    be.add_argument("--scale", type=_scale, required=True, help="magnification factor s > 1")
    be.add_argument("--profile", choices=[m.value for m in Profile], default="y",
                    help="colour handling (default: y)")
    be.add_argument("--solver", choices=harness.SOLVERS, default="wsdsr")
    be.add_argument("--ablation", action="append", metavar="KEY=VALUE",
                    help="reuse=off, search=global|local, wiener2d=dct (repeatable)")
    be.add_argument("--oracle-gt", metavar="DIR", help="match on ground truth images from DIR")
    be.add_argument("--iterations", type=_positive, metavar="K",
                    help="force K iterations instead of the residual heuristic")
    be.add_argument("--config", metavar="FILE", help="key=value parameter overrides")
    be.add_argument("--dump-config", action="store_true", help="print effective parameters and exit")
    be.add_argument("--csv", help="write name,psnr,time,K rows")
    be.add_argument("-q", "--quiet", action="store_true", help="no per-image progress")
    be.set_defaults(func=cmd_bench)

    ps = sub.add_parser("psnr", help="PSNR between two PNGs (luma for colour)")
    ps.add_argument("a")
    ps.add_argument("b")
    ps.add_argument("--trim", type=int, default=0, help="border pixels to drop")
    ps.set_defaults(func=cmd_psnr)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (InvalidInputError, FileNotFoundError) as exc:
        print(f"sr: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
