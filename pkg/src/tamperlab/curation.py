"""Tamper descriptions, the retention filter chain, and the balanced split.

Descriptions come from fixed templates keyed by manipulation type;
multi-edit descriptions concatenate the single-edit sentences in applied
order.  The filter chain stamps a fixed-order verdict list onto a record
and recomputes its retention flag; samples without a human score stay in
a pending-review state rather than being discarded.
"""

from __future__ import annotations

import dataclasses
import logging

import numpy as np

from .concentration import (
    ConcentrationClass,
    ConcentrationScores,
    classify_concentration,
)
from .labeling import (
    MAGNITUDE_HI,
    MAGNITUDE_LO,
    MIN_OVERLAP,
    CheckVerdict,
    LabelArtifacts,
    SizeBucket,
    edit_magnitude_check,
    overlap_ratio,
    pixel_semantic_check,
)
from .raster import BinaryLabel
from .records import (
    HUMAN_MIN_SCORE,
    VLM_MIN_SCORE,
    EditDescriptor,
    Manipulation,
    SampleRecord,
)

logger = logging.getLogger(__name__)

_TEMPLATES = {
    Manipulation.BACKGROUND_CHANGE: "The background was changed while keeping the foreground unchanged.",
    Manipulation.OBJECT_REMOVAL: "The {orig} was removed from the image.",
    Manipulation.OBJECT_ADDITION: "A {orig} was added to the image.",
    Manipulation.INTRA_CLASS_REPLACEMENT: "The {orig} was replaced with a different-looking {orig}.",
    Manipulation.INTER_CLASS_REPLACEMENT: "The {orig} was replaced with a {repl}.",
    Manipulation.COLOR_CHANGE: "The color of the {orig} was changed.",
    Manipulation.MOTION_CHANGE: "The {orig} was edited to show a small motion change.",
    Manipulation.MATERIAL_CHANGE: "The material appearance of the {orig} was changed.",
}


def describe(
    manipulation: Manipulation, orig_class: str | None = None, repl_class: str | None = None
) -> str:
    """Instantiate the single-edit description template for one manipulation."""
    if manipulation is Manipulation.MULTI_EDIT:
        raise ValueError("multi_edit descriptions are built via describe_multi")
    if (repl_class is not None) != (
        manipulation is Manipulation.INTER_CLASS_REPLACEMENT
    ):
        raise ValueError(
            "repl_class is required for inter-class replacement and only there"
        )
    template = _TEMPLATES[manipulation]
    if manipulation is not Manipulation.BACKGROUND_CHANGE and orig_class is None:
        raise ValueError(f"{manipulation.value} needs the affected class name")
    return template.format(orig=orig_class, repl=repl_class)


def describe_edit(edit: EditDescriptor) -> str:
    return describe(edit.manipulation, edit.orig_class, edit.repl_class)


def describe_multi(edits: list[EditDescriptor] | tuple[EditDescriptor, ...]) -> str:
    """Concatenate single-edit descriptions in applied order, one per line."""
    if not 2 <= len(edits) <= 3:
        raise ValueError(f"multi-edit needs 2-3 edits, got {len(edits)}")
    return "\n".join(describe_edit(e) for e in edits)


def describe_record(rec: SampleRecord) -> str:
    if rec.manipulation is Manipulation.MULTI_EDIT:
        return describe_multi(rec.edit_sequence)
    if len(rec.edit_sequence) == 1:
        return describe_edit(rec.edit_sequence[0])
    raise ValueError(f"record {rec.id} carries no edit descriptor")


def run_filter_chain(
    record: SampleRecord,
    artifacts: LabelArtifacts,
    guide_mask: BinaryLabel | None = None,
    scores: ConcentrationScores | None = None,
    magnitude_lo: int = MAGNITUDE_LO,
    magnitude_hi: int = MAGNITUDE_HI,
    min_overlap: float = MIN_OVERLAP,
    vlm_min: int = VLM_MIN_SCORE,
    human_min: int = HUMAN_MIN_SCORE,
    overlap_value: float | None = None,
) -> SampleRecord:
    """Stamp the fixed-order verdicts onto a record and recompute retention.

    Verdict order: magnitude, fidelity_vlm, fidelity_human, overlap (only
    when a guide mask is supplied), concentration.  A missing human score
    fails the human verdict but marks the record pending review instead of
    discarded; scoring it later re-runs this chain.  `overlap_value` lets
    a re-run reuse a previously measured ratio when the guide mask is no
    longer at hand.
    """
    verdicts = [edit_magnitude_check(artifacts.tampered_size, magnitude_lo, magnitude_hi)]

    vlm = record.vlm_fidelity
    verdicts.append(
        CheckVerdict(
            name="fidelity_vlm",
            passed=vlm is not None and vlm >= vlm_min,
            measured=-1.0 if vlm is None else float(vlm),
            bounds=f">= {vlm_min}",
        )
    )

    human = record.human_realism
    verdicts.append(
        CheckVerdict(
            name="fidelity_human",
            passed=human is not None and human >= human_min,
            measured=-1.0 if human is None else float(human),
            bounds=f">= {human_min}" + (" (pending review)" if human is None else ""),
        )
    )

    if guide_mask is not None:
        verdicts.append(
            pixel_semantic_check(overlap_ratio(artifacts.label, guide_mask), min_overlap)
        )
    elif overlap_value is not None:
        verdicts.append(pixel_semantic_check(overlap_value, min_overlap))

    if scores is None:
        verdicts.append(
            CheckVerdict(
                name="concentration",
                passed=False,
                measured=1.0,
                bounds="decision table (no scores: empty label)",
            )
        )
    else:
        concentrated = (
            classify_concentration(scores) is ConcentrationClass.CONCENTRATED
        )
        verdicts.append(
            CheckVerdict(
                name="concentration",
                passed=concentrated,
                measured=scores.r_grid,
                bounds=f"decision table, r_dens={scores.r_dens:.4f}",
            )
        )

    retained = all(v.passed for v in verdicts)
    return dataclasses.replace(
        record,
        tau=artifacts.tau,
        tampered_size=artifacts.tampered_size,
        verdicts=tuple(verdicts),
        retained=retained,
    )


@dataclasses.dataclass(frozen=True)
class SplitTargets:
    size_ratio: tuple[float, float, float] = (4.0, 3.0, 3.0)
    per_class_cap: int | None = None
    type_weights: dict[str, float] | None = None

    def __post_init__(self):
        if any(r <= 0 for r in self.size_ratio):
            raise ValueError("size ratio entries must be positive")


_BUCKET_ORDER = (SizeBucket.SMALL, SizeBucket.MEDIUM, SizeBucket.LARGE)


def _apportion(total: int, fracs: list[float], limits: list[int]) -> list[int]:
    # Largest-remainder apportionment, capped by per-bucket availability.
    exact = [total * f for f in fracs]
    quotas = [min(int(e), lim) for e, lim in zip(exact, limits)]
    remainders = sorted(
        range(len(fracs)),
        key=lambda i: (-(exact[i] - int(exact[i])), i),
    )
    short = total - sum(quotas)
    for i in remainders:
        if short <= 0:
            break
        if quotas[i] < limits[i]:
            quotas[i] += 1
            short -= 1
    return quotas


def balanced_split(
    records: list[SampleRecord], targets: SplitTargets, seed: int
) -> list[str]:
    """Pick a bucket-, class- and type-balanced subset; returns sorted ids.

    Over-represented classes are first downsampled to per_class_cap, then
    the largest subset whose size buckets match size_ratio (within one
    sample per bucket) is drawn, balancing manipulation types inside each
    bucket by type_weights.  Deterministic under `seed`.
    """
    if any(not r.retained for r in records):
        raise ValueError("balanced_split expects only retained records")
    rng = np.random.default_rng(seed)

    pool = list(records)
    if targets.per_class_cap is not None:
        by_class: dict[str, list[SampleRecord]] = {}
        for rec in pool:
            by_class.setdefault(rec.semantic_labels[0], []).append(rec)
        pool = []
        for cls in sorted(by_class):
            group = by_class[cls]
            if len(group) > targets.per_class_cap:
                keep = rng.choice(len(group), size=targets.per_class_cap, replace=False)
                group = [group[i] for i in sorted(keep)]
            pool.extend(group)

    buckets: dict[SizeBucket, list[SampleRecord]] = {b: [] for b in _BUCKET_ORDER}
    for rec in pool:
        buckets[rec.size_bucket].append(rec)

    ratio_sum = sum(targets.size_ratio)
    fracs = [r / ratio_sum for r in targets.size_ratio]
    counts = [len(buckets[b]) for b in _BUCKET_ORDER]
    if min(counts) == 0:
        logger.warning(
            "balanced_split: empty size bucket(s) %s; best-effort selection",
            [b.value for b, c in zip(_BUCKET_ORDER, counts) if c == 0],
        )
    feasible = [c / f for c, f in zip(counts, fracs) if c > 0]
    n_total = int(min(feasible)) if feasible else 0
    quotas = _apportion(n_total, fracs, counts)

    selected: list[str] = []
    for bucket, quota in zip(_BUCKET_ORDER, quotas):
        group = buckets[bucket]
        by_type: dict[str, list[SampleRecord]] = {}
        for rec in group:
            by_type.setdefault(rec.manipulation.value, []).append(rec)
        queues = {}
        for t in sorted(by_type):
            q = by_type[t]
            order = rng.permutation(len(q))
            queues[t] = [q[i] for i in order]
        weights = {
            t: (targets.type_weights or {}).get(t, 1.0) for t in queues
        }
        taken = {t: 0 for t in queues}
        for _ in range(quota):
            avail = [t for t in sorted(queues) if queues[t]]
            if not avail:
                break
            # divisor-method pick: most under-served type wins, name breaks ties
            t = min(avail, key=lambda t: (-weights[t] / (taken[t] + 1), t))
            selected.append(queues[t].pop().id)
            taken[t] += 1
    return sorted(selected)
