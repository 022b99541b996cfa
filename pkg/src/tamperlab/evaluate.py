"""Assemble an evaluation report from detector outputs on disk.

Predictions live in one directory: a 16-bit PNG probability map per sample
id, plus an optional `<id>.scores.json` file carrying per-class scores for
the semantic metrics.  Ground truth comes from the records' pixel-label
paths.  Confusion-based metrics binarize probabilities at 0.5.
"""

from __future__ import annotations

import dataclasses
import json
import logging
from pathlib import Path

import numpy as np

from . import metrics
from .raster import BinaryLabel, load_float_map, load_image
from .records import SampleRecord

logger = logging.getLogger(__name__)

BINARIZE_AT = 0.5


@dataclasses.dataclass
class EvalInputs:
    confusions: list[metrics.ConfusionCounts]
    pairs: list[tuple[BinaryLabel, BinaryLabel]]
    prob_maps: list
    gts: list[BinaryLabel]
    class_scores: list[np.ndarray]
    class_gt_sets: list[set[int]]
    n_unmatchable: int
    missing: list[str]


def _load_gt(path: str) -> BinaryLabel:
    raster = load_image(path)
    return BinaryLabel(raster.data.max(axis=2) > 0.5)


def collect_inputs(records: list[SampleRecord], pred_dir) -> EvalInputs:
    pred_dir = Path(pred_dir)
    inputs = EvalInputs([], [], [], [], [], [], 0, [])
    for rec in records:
        pred_path = pred_dir / f"{rec.id}.png"
        if not pred_path.exists():
            inputs.missing.append(rec.id)
            continue
        gt = _load_gt(rec.paths.pixel_label)
        prob = load_float_map(pred_path)
        if prob.values.shape != gt.bits.shape:
            inputs.missing.append(rec.id)
            logger.warning(
                "prediction %s has shape %s, ground truth %s; skipped",
                rec.id,
                prob.values.shape,
                gt.bits.shape,
            )
            continue
        pred_label = BinaryLabel(prob.values > BINARIZE_AT)
        inputs.confusions.append(metrics.confusion(pred_label, gt))
        inputs.pairs.append((pred_label, gt))
        inputs.prob_maps.append(prob)
        inputs.gts.append(gt)

        score_path = pred_dir / f"{rec.id}.scores.json"
        if score_path.exists():
            payload = json.loads(score_path.read_text(encoding="utf-8"))
            classes = [str(c) for c in payload["classes"]]
            scores = np.asarray(payload["scores"], dtype=np.float64)
            if scores.shape != (len(classes),):
                raise ValueError(f"{score_path}: scores/classes length mismatch")
            gt_set = {classes.index(name) for name in rec.semantic_labels if name in classes}
            if gt_set:
                inputs.class_scores.append(scores)
                inputs.class_gt_sets.append(gt_set)
            else:
                inputs.n_unmatchable += 1
    return inputs


def _topk(inputs: EvalInputs, k: int) -> float:
    total = len(inputs.class_scores) + inputs.n_unmatchable
    if total == 0:
        return 0.0
    if not inputs.class_scores:
        return 0.0
    acc = metrics.topk_accuracy(inputs.class_scores, inputs.class_gt_sets, k)
    return acc * len(inputs.class_scores) / total


def build_report(records: list[SampleRecord], pred_dir) -> tuple[metrics.EvalReport, list[str]]:
    inputs = collect_inputs(records, pred_dir)
    pooled = metrics.ConfusionCounts()
    for c in inputs.confusions:
        pooled = pooled + c
    try:
        auc_value = metrics.auc(inputs.prob_maps, inputs.gts) if inputs.prob_maps else 0.0
    except ValueError:
        logger.warning("single-class pixel pool; AUC reported as 0")
        auc_value = 0.0
    report = metrics.EvalReport(
        recall=metrics.recall(pooled),
        precision=metrics.precision(pooled),
        f1=metrics.f1(pooled),
        auc=auc_value,
        iou=metrics.iou_dataset(inputs.confusions),
        g_iou=metrics.g_iou(inputs.pairs),
        top1_acc=_topk(inputs, 1),
        top5_acc=_topk(inputs, 5),
        n_samples=len(inputs.confusions),
    )
    return report, inputs.missing
