from pathlib import Path

import numpy as np
import pytest

from tamperlab.raster import BinaryLabel, FloatMap, ImageRaster


@pytest.fixture(scope="session")
def textured():
    from tamperlab.synth import make_textured_image

    return make_textured_image(240, 320, seed=1)


def raster(arr) -> ImageRaster:
    return ImageRaster(np.asarray(arr, dtype=np.float64))


def mask(arr) -> BinaryLabel:
    return BinaryLabel(np.asarray(arr, dtype=bool))


def fmap(arr) -> FloatMap:
    return FloatMap(np.asarray(arr, dtype=np.float64))


def build_pair_dataset(root: Path, n_pairs: int = 2, size: int = 200, edit: int = 60):
    """Write n_pairs synthetic (orig, tampered, guide) triples plus a manifest.

    Each tampered image is the original with an `edit` x `edit` square shifted
    in intensity, so the expected label is that square.
    """
    from tamperlab.raster import save_mask
    from tamperlab.synth import make_textured_image, paste_square
    from PIL import Image

    root.mkdir(parents=True, exist_ok=True)
    lines = []
    for i in range(n_pairs):
        orig = make_textured_image(size, size, seed=100 + i)
        row = 40 + 7 * i
        gen, edit_mask = paste_square(orig, row, 50, edit, delta=0.35)
        orig_path = root / f"orig_{i}.png"
        gen_path = root / f"gen_{i}.png"
        guide_path = root / f"guide_{i}.png"
        for img, path in ((orig, orig_path), (gen, gen_path)):
            arr = np.rint(img.data * 255).astype(np.uint8)
            Image.fromarray(arr, mode="RGB").save(path)
        save_mask(edit_mask, guide_path)
        lines.append(
            f"{orig_path}\t{gen_path}\t{guide_path}"
            f"\tmanipulation=intra_class_replacement\tclass=dog\tvlm=9"
        )
    manifest = root / "pairs.tsv"
    manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return manifest


def build_review_store(root: Path, n: int = 20):
    from tamperlab.synth import make_demo_review_store

    return make_demo_review_store(root, n)
