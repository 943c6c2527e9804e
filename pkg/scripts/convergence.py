"""PSNR and solve time as a function of the forced iteration count.

    python scripts/convergence.py data/nat5/coins.png data/nat5/coffee.png --scale 4

Each K is a separate run, because the strength schedule depends on K. With
``--trace`` the PSNR after every iteration of the largest K is written too.
"""
import argparse
import csv
from pathlib import Path

from wsdsr import defaults, harness, super_resolve
from wsdsr.image import psnr, quantize8, read_png, trim_border


def trace(z, s, K):
    """PSNR of x^k for k = 1..K within a single K-iteration run."""
    gt, lr, _ = harness.protocol_pair(z, s)
    b = harness.border_width(s)
    ref = trim_border(gt[0], b)
    out = []
    super_resolve(lr[0], s, defaults(s), iterations=K,
                  callback=lambda k, xt, x: out.append((k, psnr(trim_border(quantize8(x), b), ref))))
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("images", nargs="+", type=Path)
    ap.add_argument("--scale", type=float, default=4.0)
    ap.add_argument("--ks", default="20,50,100,200,400", help="comma-separated iteration counts")
    ap.add_argument("--trace", action="store_true")
    ap.add_argument("--csv", type=Path, help="write image,K,psnr,time rows")
    args = ap.parse_args(argv)

    ks = [int(k) for k in args.ks.split(",")]
    rows = []
    for path in args.images:
        z = read_png(path)
        auto = harness.evaluate_image(z, args.scale)
        print(f"{path.stem}: heuristic K={auto.K}, PSNR {auto.psnr:.3f} dB")
        for K in ks:
            rec = harness.evaluate_image(z, args.scale, iterations=K)
            rows.append((path.stem, K, rec.psnr, rec.time_s))
            print(f"  K={K:<4d} {rec.psnr:8.3f} dB {rec.time_s:8.2f}s", flush=True)
        if args.trace:
            for k, p in trace(z, args.scale, max(ks)):
                print(f"  k={k:<4d} {p:8.3f}")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["image", "K", "psnr", "time"])
            w.writerows([(n, K, f"{p:.6f}", f"{t:.4f}") for n, K, p, t in rows])


if __name__ == "__main__":
    main()
