"""Pipeline configuration and the plain-text key/value config file.

The file format is one `key = value` pair per line with `#` comments.
Rectification, labeling and filter thresholds share a single file; every
key is optional and falls back to the built-in defaults.
"""

from __future__ import annotations

import dataclasses
from pathlib import Path

from .curation import SplitTargets
from .labeling import DEFAULT_TAU, MAGNITUDE_HI, MAGNITUDE_LO, MIN_OVERLAP
from .records import HUMAN_MIN_SCORE, VLM_MIN_SCORE
from .rectify import RectifyConfig


@dataclasses.dataclass(frozen=True)
class FilterThresholds:
    magnitude_lo: int = MAGNITUDE_LO
    magnitude_hi: int = MAGNITUDE_HI
    min_overlap: float = MIN_OVERLAP
    vlm_min: int = VLM_MIN_SCORE
    human_min: int = HUMAN_MIN_SCORE


@dataclasses.dataclass(frozen=True)
class PipelineConfig:
    tau: float = DEFAULT_TAU
    workers: int = 1
    seed: int = 0
    diff_reduce: str = "max"
    rectify: RectifyConfig = RectifyConfig()
    filters: FilterThresholds = FilterThresholds()
    split: SplitTargets = SplitTargets()

    def __post_init__(self):
        if not 0.0 < self.tau < 1.0:
            raise ValueError("tau must lie in (0, 1)")
        if self.workers < 1:
            raise ValueError("worker count must be >= 1")


_INT_KEYS = {
    "workers",
    "seed",
    "iterations",
    "max_features",
    "min_consensus",
    "magnitude_lo",
    "magnitude_hi",
    "vlm_min",
    "human_min",
    "per_class_cap",
}
_FLOAT_KEYS = {
    "tau",
    "inlier_px",
    "low_intensity",
    "max_area_ratio",
    "min_overlap",
}


def parse_config_text(text: str) -> dict[str, object]:
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value'")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key in _INT_KEYS:
            values[key] = int(val)
        elif key in _FLOAT_KEYS:
            values[key] = float(val)
        elif key == "size_ratio":
            parts = [float(p) for p in val.replace(",", " ").split()]
            if len(parts) != 3:
                raise ValueError(f"config line {lineno}: size_ratio needs 3 numbers")
            values[key] = tuple(parts)
        elif key == "diff_reduce":
            values[key] = val
        else:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
    return values


def load_config(path=None, **overrides) -> PipelineConfig:
    """Build a PipelineConfig from an optional file plus keyword overrides."""
    values: dict[str, object] = {}
    if path is not None:
        values.update(parse_config_text(Path(path).read_text(encoding="utf-8")))
    values.update({k: v for k, v in overrides.items() if v is not None})

    rect_fields = {f.name for f in dataclasses.fields(RectifyConfig)}
    filt_fields = {f.name for f in dataclasses.fields(FilterThresholds)}
    rect = {k: v for k, v in values.items() if k in rect_fields}
    filt = {k: v for k, v in values.items() if k in filt_fields}
    split = {
        k: v for k, v in values.items() if k in {"size_ratio", "per_class_cap"}
    }
    top = {
        k: v
        for k, v in values.items()
        if k in {"tau", "workers", "diff_reduce"}
    }
    if "seed" in values:
        top["seed"] = values["seed"]
        rect.setdefault("seed", values["seed"])
    return PipelineConfig(
        rectify=RectifyConfig(**rect),
        filters=FilterThresholds(**filt),
        split=SplitTargets(**split),
        **top,
    )
