"""Pixel-grounded tamper label construction and evaluation toolkit."""

from .raster import (
    BinaryLabel,
    FloatMap,
    Homography,
    ImageRaster,
    load_image,
    save_mask,
    to_gray,
)
from .labeling import (
    CheckVerdict,
    LabelArtifacts,
    SizeBucket,
    diff_map,
    edit_magnitude_check,
    label_artifacts,
    overlap_ratio,
    pixel_semantic_check,
    size_bucket,
    threshold_label,
)
from .concentration import (
    ConcentrationClass,
    ConcentrationScores,
    classify_concentration,
    concentration_scores,
    grid_coverage_ratio,
    local_density,
)
from .rectify import RectifyConfig, RectifyResult, rectify_pair

__version__ = "0.1.0"

__all__ = [
    "BinaryLabel",
    "CheckVerdict",
    "ConcentrationClass",
    "ConcentrationScores",
    "FloatMap",
    "Homography",
    "ImageRaster",
    "LabelArtifacts",
    "RectifyConfig",
    "RectifyResult",
    "SizeBucket",
    "classify_concentration",
    "concentration_scores",
    "diff_map",
    "edit_magnitude_check",
    "grid_coverage_ratio",
    "label_artifacts",
    "load_image",
    "local_density",
    "overlap_ratio",
    "pixel_semantic_check",
    "rectify_pair",
    "save_mask",
    "size_bucket",
    "threshold_label",
    "to_gray",
]
