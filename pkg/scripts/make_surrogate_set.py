"""Write the five-image stand-in benchmark set used when Set5 is unavailable.

Crops are 240x240 (divisible by 2, 3 and 4) from scikit-image sample data.
Coordinates are fixed here once; do not retune them against results.

    python scripts/make_surrogate_set.py data/nat5
"""
import argparse
from pathlib import Path

import numpy as np
from PIL import Image
from skimage import data

SIDE = 240

# name -> (loader, top, left); centred crops except the astronaut face
CROPS = {
    "astronaut": (data.astronaut, 20, 130),
    "camera": (data.camera, 136, 136),
    "cat": (data.chelsea, 30, 105),
    "coffee": (data.coffee, 80, 180),
    "coins": (data.coins, 31, 72),
}

# stand-ins for the two images the convergence checks single out
BIRD = "coffee"
BUTTERFLY = "coins"


def crop(name: str) -> np.ndarray:
    load, top, left = CROPS[name]
    img = load()
    return np.ascontiguousarray(img[top : top + SIDE, left : left + SIDE])


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out", type=Path)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    for name in CROPS:
        arr = crop(name)
        Image.fromarray(arr).save(args.out / f"{name}.png")
        print(f"{name}: {arr.shape}")
    (args.out / "manifest.txt").write_text("".join(f"{n}.png\n" for n in CROPS))


if __name__ == "__main__":
    main()
