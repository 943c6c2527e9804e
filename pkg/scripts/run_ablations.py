"""Benchmark the default solver against its ablations and the bicubic baseline.

    python scripts/run_ablations.py data/nat5 --scale 4 --csv ablations.csv

Prints mean PSNR, total solve time, PSNR difference and speedup relative to
the default configuration. Set SR_THREADS to pin the worker count.
"""
import argparse
import csv
import sys

from wsdsr import defaults, harness

VARIANTS = {
    "default": None,
    "bicubic": "solver",
    "wiener2d=dct": "wiener2d=dct",
    "reuse=off": "reuse=off",
    "search=global": "search=global",
    "search=local": "search=local",
    "oracle": "oracle",
}


def run_variant(directory, s, name):
    params = defaults(s)
    kind = VARIANTS[name]
    if kind == "solver":
        return harness.run_benchmark(directory, s, params=params, solver="bicubic")
    if kind == "oracle":
        return harness.run_benchmark(directory, s, params=params, oracle_dir=directory)
    if kind:
        params = harness.apply_ablation(params, kind)
    return harness.run_benchmark(directory, s, params=params)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("directory")
    ap.add_argument("--scale", type=float, default=4.0)
    ap.add_argument("--only", nargs="+", choices=list(VARIANTS), help="subset of variants")
    ap.add_argument("--csv", help="write one row per variant")
    args = ap.parse_args(argv)

    names = args.only or list(VARIANTS)
    if "default" not in names:
        names = ["default"] + names
    results = {}
    for name in names:
        print(f"running {name} ...", file=sys.stderr, flush=True)
        results[name] = run_variant(args.directory, args.scale, name)

    base = results["default"]
    rows = []
    print(f"{'variant':<16}{'PSNR':>9}{'dPSNR':>9}{'time[s]':>10}{'speedup':>9}")
    for name, run in results.items():
        d = run.mean_psnr - base.mean_psnr
        speed = run.total_time and base.total_time / run.total_time
        rows.append((name, run.mean_psnr, d, run.total_time, speed))
        print(f"{name:<16}{run.mean_psnr:9.3f}{d:+9.3f}{run.total_time:10.1f}{speed:9.2f}")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["variant", "psnr", "delta_psnr", "time", "speedup_vs_default"])
            w.writerows([(n, f"{p:.6f}", f"{d:.6f}", f"{t:.4f}", f"{sp:.4f}") for n, p, d, t, sp in rows])


if __name__ == "__main__":
    main()
