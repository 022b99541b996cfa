"""Benchmark sample records and their JSON-lines serialization.

One record tracks a single (original, tampered) pair through the whole
pipeline: file paths for the four images, the manipulation metadata,
fidelity scores, the filter-chain verdicts and the final retention flag.
Records serialize one-per-line with a fixed key order so files diff
cleanly; reading validates the schema and reports the offending line.
"""

from __future__ import annotations

import dataclasses
import enum
import json
from pathlib import Path

from .labeling import CheckVerdict, SizeBucket


class SchemaError(ValueError):
    """A record file violates the expected schema."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class Manipulation(enum.Enum):
    INTRA_CLASS_REPLACEMENT = "intra_class_replacement"
    INTER_CLASS_REPLACEMENT = "inter_class_replacement"
    OBJECT_REMOVAL = "object_removal"
    OBJECT_ADDITION = "object_addition"
    COLOR_CHANGE = "color_change"
    MOTION_CHANGE = "motion_change"
    MATERIAL_CHANGE = "material_change"
    BACKGROUND_CHANGE = "background_change"
    MULTI_EDIT = "multi_edit"


# Manipulations where a guide mask steers generation; only these get the
# pixel-vs-mask overlap check.
MASK_GUIDED = frozenset(
    {
        Manipulation.INTRA_CLASS_REPLACEMENT,
        Manipulation.INTER_CLASS_REPLACEMENT,
        Manipulation.OBJECT_REMOVAL,
    }
)

VLM_MIN_SCORE = 9
HUMAN_MIN_SCORE = 4


@dataclasses.dataclass(frozen=True)
class EditDescriptor:
    """A single edit: the manipulation plus the classes it touches."""

    manipulation: Manipulation
    orig_class: str | None = None
    repl_class: str | None = None

    def __post_init__(self):
        if self.manipulation is Manipulation.MULTI_EDIT:
            raise ValueError("an edit descriptor must be a single-edit type")


@dataclasses.dataclass(frozen=True)
class SamplePaths:
    original: str
    tampered: str
    diff_map: str
    pixel_label: str


@dataclasses.dataclass(frozen=True)
class SampleRecord:
    id: str
    paths: SamplePaths
    manipulation: Manipulation
    edit_sequence: tuple[EditDescriptor, ...]
    semantic_labels: tuple[str, ...]
    tau: float
    tampered_size: int
    size_bucket: SizeBucket
    vlm_fidelity: int | None
    human_realism: int | None
    generator: str
    verdicts: tuple[CheckVerdict, ...]
    description: str
    retained: bool

    def __post_init__(self):
        object.__setattr__(self, "edit_sequence", tuple(self.edit_sequence))
        object.__setattr__(
            self, "semantic_labels", tuple(sorted(set(self.semantic_labels)))
        )
        object.__setattr__(self, "verdicts", tuple(self.verdicts))
        if not self.id:
            raise ValueError("record id must be nonempty")
        if not self.semantic_labels:
            raise ValueError("tampered samples need at least one semantic label")
        if not 0.0 < self.tau < 1.0:
            raise ValueError("tau must lie in (0, 1)")
        if self.tampered_size < 0:
            raise ValueError("tampered_size must be >= 0")
        if self.vlm_fidelity is not None and not 0 <= self.vlm_fidelity <= 10:
            raise ValueError("vlm_fidelity must lie in [0, 10]")
        if self.human_realism is not None and not 1 <= self.human_realism <= 5:
            raise ValueError("human_realism must lie in [1, 5]")
        is_multi = self.manipulation is Manipulation.MULTI_EDIT
        if is_multi != (len(self.edit_sequence) in (2, 3)):
            raise ValueError(
                "multi_edit records need 2-3 edits; single edits need at most 1"
            )
        if self.retained:
            if not all(v.passed for v in self.verdicts):
                raise ValueError("retained record has a failed verdict")
            if self.vlm_fidelity is None or self.vlm_fidelity < VLM_MIN_SCORE:
                raise ValueError("retained record below the VLM fidelity gate")
            if self.human_realism is None or self.human_realism < HUMAN_MIN_SCORE:
                raise ValueError("retained record below the human realism gate")

    @property
    def pending_review(self) -> bool:
        return self.human_realism is None


def _record_to_dict(rec: SampleRecord) -> dict:
    return {
        "id": rec.id,
        "paths": dataclasses.asdict(rec.paths),
        "manipulation": rec.manipulation.value,
        "edit_sequence": [
            {
                "manipulation": e.manipulation.value,
                "orig_class": e.orig_class,
                "repl_class": e.repl_class,
            }
            for e in rec.edit_sequence
        ],
        "semantic_labels": list(rec.semantic_labels),
        "tau": rec.tau,
        "tampered_size": rec.tampered_size,
        "size_bucket": rec.size_bucket.value,
        "vlm_fidelity": rec.vlm_fidelity,
        "human_realism": rec.human_realism,
        "generator": rec.generator,
        "verdicts": [dataclasses.asdict(v) for v in rec.verdicts],
        "description": rec.description,
        "retained": rec.retained,
    }


def _require(cond: bool, message: str):
    if not cond:
        raise ValueError(message)


def _record_from_dict(d: dict) -> SampleRecord:
    _require(isinstance(d, dict), "record line is not a JSON object")
    missing = [
        k
        for k in (
            "id",
            "paths",
            "manipulation",
            "edit_sequence",
            "semantic_labels",
            "tau",
            "tampered_size",
            "size_bucket",
            "vlm_fidelity",
            "human_realism",
            "generator",
            "verdicts",
            "description",
            "retained",
        )
        if k not in d
    ]
    _require(not missing, f"missing fields: {missing}")
    paths = d["paths"]
    _require(
        isinstance(paths, dict)
        and set(paths) == {"original", "tampered", "diff_map", "pixel_label"},
        "paths must name the four images",
    )
    try:
        manipulation = Manipulation(d["manipulation"])
        bucket = SizeBucket(d["size_bucket"])
        edits = tuple(
            EditDescriptor(
                manipulation=Manipulation(e["manipulation"]),
                orig_class=e.get("orig_class"),
                repl_class=e.get("repl_class"),
            )
            for e in d["edit_sequence"]
        )
        verdicts = tuple(
            CheckVerdict(
                name=v["name"],
                passed=bool(v["passed"]),
                measured=float(v["measured"]),
                bounds=str(v["bounds"]),
            )
            for v in d["verdicts"]
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed nested field: {exc}") from exc
    return SampleRecord(
        id=str(d["id"]),
        paths=SamplePaths(**{k: str(v) for k, v in paths.items()}),
        manipulation=manipulation,
        edit_sequence=edits,
        semantic_labels=tuple(str(s) for s in d["semantic_labels"]),
        tau=float(d["tau"]),
        tampered_size=int(d["tampered_size"]),
        size_bucket=bucket,
        vlm_fidelity=None if d["vlm_fidelity"] is None else int(d["vlm_fidelity"]),
        human_realism=None if d["human_realism"] is None else int(d["human_realism"]),
        generator=str(d["generator"]),
        verdicts=verdicts,
        description=str(d["description"]),
        retained=bool(d["retained"]),
    )


def record_to_json(rec: SampleRecord) -> str:
    return json.dumps(_record_to_dict(rec), ensure_ascii=False)


def write_records(records: list[SampleRecord], path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(record_to_json(rec))
            fh.write("\n")


def read_records(path) -> list[SampleRecord]:
    path = Path(path)
    records = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(_record_from_dict(json.loads(line)))
            except (json.JSONDecodeError, ValueError) as exc:
                raise SchemaError(str(exc), line=lineno) from exc
    return records
