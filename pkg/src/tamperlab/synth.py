"""Synthetic image-pair generation for tests and demos.

Textured images mix a smoothed random field with scattered high-contrast
blocks so corner detection has plenty to latch onto; mild random
homographies emulate the resolution/framing drift of generative editors.
"""

from __future__ import annotations

import numpy as np

from .features import _box_blur
from .raster import BinaryLabel, Homography, ImageRaster
from .rectify import warp_to_original


def make_textured_image(
    height: int, width: int, seed: int = 0, channels: int = 3, n_blocks: int = 120
) -> ImageRaster:
    rng = np.random.default_rng(seed)
    base = rng.random((height, width))
    for _ in range(3):
        base = _box_blur(base, radius=2)
    base = 0.25 + 0.5 * (base - base.min()) / max(float(np.ptp(base)), 1e-9)
    img = np.repeat(base[:, :, None], channels, axis=2)
    for _ in range(n_blocks):
        bh = int(rng.integers(3, 12))
        bw = int(rng.integers(3, 12))
        r = int(rng.integers(0, height - bh))
        c = int(rng.integers(0, width - bw))
        color = rng.random(channels) * 0.9 + 0.05
        img[r : r + bh, c : c + bw] = color
    return ImageRaster(np.clip(img, 0.0, 1.0))


def random_mild_homography(
    rng: np.random.Generator,
    height: int,
    width: int,
    max_translation: float = 20.0,
    max_rotation_deg: float = 10.0,
    max_perspective: float = 5e-5,
) -> Homography:
    """Rotation about the image center + translation + mild perspective."""
    angle = np.deg2rad(rng.uniform(-max_rotation_deg, max_rotation_deg))
    tx, ty = rng.uniform(-max_translation, max_translation, size=2)
    cx, cy = (width - 1) / 2.0, (height - 1) / 2.0
    c, s = np.cos(angle), np.sin(angle)
    rot = np.array(
        [
            [c, -s, cx - c * cx + s * cy],
            [s, c, cy - s * cx - c * cy],
            [0.0, 0.0, 1.0],
        ]
    )
    trans = np.array([[1.0, 0.0, tx], [0.0, 1.0, ty], [0.0, 0.0, 1.0]])
    persp = np.eye(3)
    persp[2, 0] = rng.uniform(-max_perspective, max_perspective)
    persp[2, 1] = rng.uniform(-max_perspective, max_perspective)
    return Homography(trans @ rot @ persp)


def warp_with_ground_truth(
    orig: ImageRaster, h_gen_to_orig: Homography
) -> tuple[ImageRaster, BinaryLabel]:
    """Render the generated-frame image for a known gen->orig homography.

    gen(x) = orig(H x), so recovering the alignment of the returned image
    back onto `orig` should reproduce h_gen_to_orig.
    """
    inv = Homography(np.linalg.inv(h_gen_to_orig.m))
    return warp_to_original(orig, inv, orig.height, orig.width)


def paste_square(
    img: ImageRaster, row: int, col: int, size: int, delta: float = 0.3
) -> tuple[ImageRaster, BinaryLabel]:
    """Shift a square patch by delta (clipped); returns the edit mask too."""
    data = img.data.copy()
    data[row : row + size, col : col + size] = np.clip(
        data[row : row + size, col : col + size] + delta, 0.0, 1.0
    )
    mask = np.zeros((img.height, img.width), dtype=bool)
    mask[row : row + size, col : col + size] = True
    return ImageRaster(data), BinaryLabel(mask)


def make_demo_review_store(root, n: int = 20):
    """Self-contained review store: per-sample PNGs plus records.jsonl.

    Every sample passes all retention gates except the (missing) human
    score, so review decisions alone control retention.  Returns the
    records.jsonl path.
    """
    from pathlib import Path

    from PIL import Image

    from .concentration import concentration_scores
    from .curation import run_filter_chain
    from .labeling import LabelArtifacts, size_bucket, threshold_label
    from .raster import FloatMap, save_float_map, save_mask
    from .records import (
        EditDescriptor,
        Manipulation,
        SamplePaths,
        SampleRecord,
        write_records,
    )

    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(0)
    records = []
    for i in range(n):
        sample_id = f"rev-{i:04d}"
        diff_values = np.zeros((100, 100))
        diff_values[20:80, 20:80] = 0.5
        diff = FloatMap(diff_values)
        label = threshold_label(diff, 0.05)
        orig = rng.uniform(0.2, 0.9, size=(100, 100, 3))
        tampered = orig.copy()
        tampered[20:80, 20:80] = np.clip(tampered[20:80, 20:80] + 0.3, 0, 1)
        paths = SamplePaths(
            original=str(root / f"{sample_id}_orig.png"),
            tampered=str(root / f"{sample_id}_gen.png"),
            diff_map=str(root / f"{sample_id}_diff.png"),
            pixel_label=str(root / f"{sample_id}_label.png"),
        )
        Image.fromarray(np.rint(orig * 255).astype(np.uint8), mode="RGB").save(
            paths.original
        )
        Image.fromarray(np.rint(tampered * 255).astype(np.uint8), mode="RGB").save(
            paths.tampered
        )
        save_float_map(diff, paths.diff_map)
        save_mask(label, paths.pixel_label)
        artifacts = LabelArtifacts(
            diff=diff, label=label, tau=0.05, tampered_size=label.count()
        )
        record = SampleRecord(
            id=sample_id,
            paths=paths,
            manipulation=Manipulation.COLOR_CHANGE,
            edit_sequence=(
                EditDescriptor(Manipulation.COLOR_CHANGE, orig_class="car"),
            ),
            semantic_labels=("car",),
            tau=0.05,
            tampered_size=artifacts.tampered_size,
            size_bucket=size_bucket(artifacts.tampered_size),
            vlm_fidelity=9,
            human_realism=None,
            generator="synthetic",
            verdicts=(),
            description="The color of the car was changed.",
            retained=False,
        )
        records.append(
            run_filter_chain(record, artifacts, scores=concentration_scores(label))
        )
    records_path = root / "records.jsonl"
    write_records(records, records_path)
    return records_path
