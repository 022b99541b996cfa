"""Difference maps, thresholded tamper labels, and the scalar retention checks.

The difference map D holds the per-pixel absolute discrepancy between the
original and the tampered image; the binary label keeps pixels with D
strictly above the threshold.  Retention checks (edit magnitude, pixel vs
guide-mask overlap, size bucketing) are plain predicates over scalars so
they can be audited independently of the images.
"""

from __future__ import annotations

import dataclasses
import enum

import numpy as np

from .raster import BinaryLabel, FloatMap, ImageRaster

MAGNITUDE_LO = 2480
MAGNITUDE_HI = 184500
MIN_OVERLAP = 0.2
SMALL_MAX = 23000
MEDIUM_MAX = 50000
DEFAULT_TAU = 0.05


class SizeBucket(enum.Enum):
    SMALL = "small"
    MEDIUM = "medium"
    LARGE = "large"


@dataclasses.dataclass(frozen=True)
class CheckVerdict:
    """Outcome of one retention check: what was measured against what bound."""

    name: str
    passed: bool
    measured: float
    bounds: str

    def __post_init__(self):
        if not np.isfinite(self.measured):
            raise ValueError("measured value must be finite")


@dataclasses.dataclass(frozen=True)
class LabelArtifacts:
    """Difference map plus its thresholded label and tampered pixel count."""

    diff: FloatMap
    label: BinaryLabel
    tau: float
    tampered_size: int

    def __post_init__(self):
        if not np.array_equal(self.label.bits, self.diff.values > self.tau):
            raise ValueError("label must equal the thresholded difference map")
        if self.tampered_size != self.label.count():
            raise ValueError("tampered_size must equal the label popcount")


def diff_map(orig: ImageRaster, gen: ImageRaster, reduce: str = "max") -> FloatMap:
    """Per-pixel absolute discrepancy, reduced over channels.

    `reduce` selects the multi-channel reduction: "max" (default, the most
    edit-sensitive), "mean", or "luma".
    """
    if orig.data.shape != gen.data.shape:
        raise ValueError(
            f"shape mismatch: {orig.data.shape} vs {gen.data.shape}"
        )
    absdiff = np.abs(orig.data - gen.data)
    if reduce == "max":
        values = absdiff.max(axis=2)
    elif reduce == "mean":
        values = absdiff.mean(axis=2)
    elif reduce == "luma":
        if orig.channels == 1:
            values = absdiff[:, :, 0]
        else:
            values = absdiff @ np.array([0.299, 0.587, 0.114])
    else:
        raise ValueError(f"unknown channel reduction {reduce!r}")
    return FloatMap(values)


def threshold_label(diff: FloatMap, tau: float) -> BinaryLabel:
    """Binary label keeping pixels with difference strictly above tau."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must lie in [0, 1], got {tau}")
    return BinaryLabel(diff.values > tau)


def label_artifacts(
    orig: ImageRaster, gen: ImageRaster, tau: float = DEFAULT_TAU, reduce: str = "max"
) -> LabelArtifacts:
    diff = diff_map(orig, gen, reduce=reduce)
    label = threshold_label(diff, tau)
    return LabelArtifacts(diff=diff, label=label, tau=tau, tampered_size=label.count())


def edit_magnitude_check(
    tampered_size: int, lo: int = MAGNITUDE_LO, hi: int = MAGNITUDE_HI
) -> CheckVerdict:
    """Tampered size must fall within [lo, hi], both ends inclusive."""
    if lo > hi:
        raise ValueError("lo must be <= hi")
    return CheckVerdict(
        name="magnitude",
        passed=lo <= tampered_size <= hi,
        measured=float(tampered_size),
        bounds=f"[{lo}, {hi}]",
    )


def overlap_ratio(label: BinaryLabel, guide_mask: BinaryLabel) -> float:
    """|label AND guide| / |guide|."""
    if label.bits.shape != guide_mask.bits.shape:
        raise ValueError("label and guide mask dimensions differ")
    guide_count = guide_mask.count()
    if guide_count == 0:
        raise ValueError("guide mask is empty")
    inter = int(np.logical_and(label.bits, guide_mask.bits).sum())
    return inter / guide_count


def pixel_semantic_check(ratio: float, min_ratio: float = MIN_OVERLAP) -> CheckVerdict:
    """Overlap with the guide mask must not fall below min_ratio."""
    if not 0.0 <= ratio <= 1.0:
        raise ValueError(f"ratio must lie in [0, 1], got {ratio}")
    return CheckVerdict(
        name="overlap",
        passed=ratio >= min_ratio,
        measured=ratio,
        bounds=f">= {min_ratio}",
    )


def size_bucket(tampered_size: int) -> SizeBucket:
    if tampered_size < SMALL_MAX:
        return SizeBucket.SMALL
    if tampered_size < MEDIUM_MAX:
        return SizeBucket.MEDIUM
    return SizeBucket.LARGE
