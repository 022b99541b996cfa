"""Global rectification: align the generated image to the original.

The full step chains corner matching, robust homography estimation,
inverse-mapped bilinear warping into the original frame, and a border
repair that replaces warp artifacts with original pixels.  Whenever
matching or model fitting fails, the generated image is bilinearly
rescaled to the original's dimensions instead (the fallback path).
"""

from __future__ import annotations

import dataclasses

import numpy as np
from scipy import ndimage

from .features import TooFewMatchesError, detect_and_match
from .homography import (
    INLIER_PX,
    MIN_CONSENSUS,
    RANSAC_ITERATIONS,
    NoConsensusError,
    estimate_homography_ransac,
)
from .raster import BinaryLabel, Homography, ImageRaster

LOW_INTENSITY = 10 / 255
MAX_AREA_RATIO = 0.10
DILATE_ITERATIONS = 2


@dataclasses.dataclass(frozen=True)
class RectifyConfig:
    iterations: int = RANSAC_ITERATIONS
    inlier_px: float = INLIER_PX
    low_intensity: float = LOW_INTENSITY
    max_area_ratio: float = MAX_AREA_RATIO
    seed: int = 0
    max_features: int = 500
    min_consensus: int = MIN_CONSENSUS


@dataclasses.dataclass(frozen=True)
class RectifyResult:
    aligned: ImageRaster
    used_homography: Homography | None
    fell_back: bool
    border_filled_fraction: float

    def __post_init__(self):
        if self.fell_back != (self.used_homography is None):
            raise ValueError("fell_back must hold exactly when no homography was used")


def _bilinear_sample(data: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Sample HxWxC data at float (x, y) positions; coordinates are clipped."""
    h, w = data.shape[:2]
    x = np.clip(xs, 0.0, w - 1.0)
    y = np.clip(ys, 0.0, h - 1.0)
    x0 = np.floor(x).astype(np.int64)
    y0 = np.floor(y).astype(np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = (x - x0)[..., None]
    fy = (y - y0)[..., None]
    top = data[y0, x0] * (1 - fx) + data[y0, x1] * fx
    bot = data[y1, x0] * (1 - fx) + data[y1, x1] * fx
    return top * (1 - fy) + bot * fy


def warp_to_original(
    gen: ImageRaster, h: Homography, out_h: int, out_w: int
) -> tuple[ImageRaster, BinaryLabel]:
    """Warp gen through h into an out_h x out_w frame.

    Each output pixel is back-projected through h^-1 and bilinearly
    sampled; the validity bit is false where the source position falls
    outside gen's bounds.
    """
    hinv = np.linalg.inv(h.m)
    ys, xs = np.mgrid[0:out_h, 0:out_w].astype(np.float64)
    denom = hinv[2, 0] * xs + hinv[2, 1] * ys + hinv[2, 2]
    denom = np.where(np.abs(denom) < 1e-12, 1e-12, denom)
    gx = (hinv[0, 0] * xs + hinv[0, 1] * ys + hinv[0, 2]) / denom
    gy = (hinv[1, 0] * xs + hinv[1, 1] * ys + hinv[1, 2]) / denom
    valid = (gx >= 0) & (gx <= gen.width - 1) & (gy >= 0) & (gy <= gen.height - 1)
    out = _bilinear_sample(gen.data, gx, gy)
    out[~valid] = 0.0
    return ImageRaster(np.clip(out, 0.0, 1.0)), BinaryLabel(valid)


def resize_bilinear(img: ImageRaster, out_h: int, out_w: int) -> ImageRaster:
    """Bilinear rescale with corner-aligned sampling."""
    if (img.height, img.width) == (out_h, out_w):
        return img
    ys = np.linspace(0, img.height - 1, out_h)
    xs = np.linspace(0, img.width - 1, out_w)
    gx, gy = np.meshgrid(xs, ys)
    out = _bilinear_sample(img.data, gx, gy)
    return ImageRaster(np.clip(out, 0.0, 1.0))


def repair_border(
    aligned: ImageRaster,
    orig: ImageRaster,
    validity: BinaryLabel,
    low_intensity: float = LOW_INTENSITY,
    max_area_ratio: float = MAX_AREA_RATIO,
) -> tuple[ImageRaster, float]:
    """Replace border-connected warp artifacts with original pixels.

    Candidate pixels are invalid or dark in every channel; the ones
    flood-fill-connected to the image border are kept, dilated twice with
    a 3x3 element, and overwritten from orig.  If the flagged fraction
    exceeds max_area_ratio the repair is aborted and `aligned` is returned
    untouched (the fraction is still reported).
    """
    if aligned.data.shape != orig.data.shape or aligned.data.shape[:2] != validity.bits.shape:
        raise ValueError("aligned, orig and validity dimensions differ")
    dark = (aligned.data < low_intensity).all(axis=2)
    candidates = ~validity.bits | dark
    if not candidates.any():
        return aligned, 0.0
    labeled, _ = ndimage.label(candidates)
    border_labels = np.unique(
        np.concatenate(
            [labeled[0, :], labeled[-1, :], labeled[:, 0], labeled[:, -1]]
        )
    )
    border_labels = border_labels[border_labels != 0]
    if border_labels.size == 0:
        return aligned, 0.0
    region = np.isin(labeled, border_labels)
    region = ndimage.binary_dilation(
        region, structure=np.ones((3, 3), dtype=bool), iterations=DILATE_ITERATIONS
    )
    filled_fraction = float(region.sum()) / region.size
    if filled_fraction > max_area_ratio:
        return aligned, filled_fraction
    out = aligned.data.copy()
    out[region] = orig.data[region]
    return ImageRaster(out), filled_fraction


def rectify_pair(
    orig: ImageRaster, gen: ImageRaster, cfg: RectifyConfig = RectifyConfig()
) -> RectifyResult:
    """Align gen to orig; falls back to plain rescaling when matching fails."""
    try:
        matches = detect_and_match(orig, gen, max_features=cfg.max_features)
        h, _ = estimate_homography_ransac(
            matches,
            iterations=cfg.iterations,
            inlier_px=cfg.inlier_px,
            seed=cfg.seed,
            min_consensus=cfg.min_consensus,
        )
    except (TooFewMatchesError, NoConsensusError):
        return RectifyResult(
            aligned=resize_bilinear(gen, orig.height, orig.width),
            used_homography=None,
            fell_back=True,
            border_filled_fraction=0.0,
        )
    aligned, validity = warp_to_original(gen, h, orig.height, orig.width)
    repaired, filled = repair_border(
        aligned, orig, validity, cfg.low_intensity, cfg.max_area_ratio
    )
    return RectifyResult(
        aligned=repaired,
        used_homography=h,
        fell_back=False,
        border_filled_fraction=filled,
    )
