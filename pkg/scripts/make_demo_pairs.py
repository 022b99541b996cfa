#!/usr/bin/env python3
"""Generate a synthetic (original, tampered, guide-mask) demo dataset.

Each pair is a textured image plus a copy with a square intensity edit,
optionally passed through a mild random homography to exercise the
rectification stage.  Writes the images and a pairs.tsv manifest ready
for `tamperlab label`.
"""

import argparse
from pathlib import Path

import numpy as np
from PIL import Image

from tamperlab.raster import save_mask
from tamperlab.synth import (
    make_textured_image,
    paste_square,
    random_mild_homography,
    warp_with_ground_truth,
)


def save_rgb(img, path):
    Image.fromarray(np.rint(img.data * 255).astype(np.uint8), mode="RGB").save(path)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="demo_data", help="output directory")
    parser.add_argument("--n-pairs", type=int, default=6)
    parser.add_argument("--size", type=int, default=240, help="image height")
    parser.add_argument("--width", type=int, default=320)
    parser.add_argument("--edit", type=int, default=60, help="square edit side")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument(
        "--warp", action="store_true",
        help="apply a mild random homography to the tampered image",
    )
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)
    lines = []
    for i in range(args.n_pairs):
        orig = make_textured_image(args.size, args.width, seed=args.seed * 1000 + i)
        row = int(rng.integers(20, args.size - args.edit - 20))
        col = int(rng.integers(20, args.width - args.edit - 20))
        tampered, guide = paste_square(orig, row, col, args.edit, delta=0.35)
        if args.warp:
            h = random_mild_homography(
                rng, args.size, args.width, max_translation=8, max_rotation_deg=4
            )
            tampered, _ = warp_with_ground_truth(tampered, h)

        orig_path = out / f"orig_{i:03d}.png"
        gen_path = out / f"gen_{i:03d}.png"
        guide_path = out / f"guide_{i:03d}.png"
        save_rgb(orig, orig_path)
        save_rgb(tampered, gen_path)
        save_mask(guide, guide_path)
        lines.append(
            f"{orig_path}\t{gen_path}\t{guide_path}"
            f"\tmanipulation=intra_class_replacement\tclass=block\tvlm=9"
        )
    manifest = out / "pairs.tsv"
    manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {args.n_pairs} pairs and {manifest}")


if __name__ == "__main__":
    main()
