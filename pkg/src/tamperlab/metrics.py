"""Pixel-localization and semantic metrics.

Confusion counts are pooled across samples for Recall/F1/IoU/AUC, while
g-IoU averages the per-sample epsilon-stabilized IoU.  Degenerate 0/0
ratios evaluate to 0.
"""

from __future__ import annotations

import dataclasses
import json

import numpy as np

from .raster import BinaryLabel, FloatMap

GIOU_EPS = 1e-7
AUC_THRESHOLDS = 256


@dataclasses.dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(
            self.tp + other.tp,
            self.fp + other.fp,
            self.fn + other.fn,
            self.tn + other.tn,
        )

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclasses.dataclass(frozen=True)
class EvalReport:
    recall: float
    precision: float
    f1: float
    auc: float
    iou: float
    g_iou: float
    top1_acc: float
    top5_acc: float
    n_samples: int

    def __post_init__(self):
        ratios = (
            self.recall, self.precision, self.f1, self.auc,
            self.iou, self.g_iou, self.top1_acc, self.top5_acc,
        )
        if not all(np.isfinite(r) and 0.0 <= r <= 1.0 for r in ratios):
            raise ValueError("report ratios must be finite and in [0, 1]")

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2)

    def table(self) -> str:
        """Fixed-order single-row table: Top-1, Top-5, Recall, F1, AUC, g-IoU, IoU."""
        header = ["Top-1", "Top-5", "Recall", "F1", "AUC", "g-IoU", "IoU"]
        row = [
            self.top1_acc,
            self.top5_acc,
            self.recall,
            self.f1,
            self.auc,
            self.g_iou,
            self.iou,
        ]
        head = "  ".join(f"{h:>7}" for h in header)
        vals = "  ".join(f"{v:7.4f}" for v in row)
        return head + "\n" + vals


def confusion(pred: BinaryLabel, gt: BinaryLabel) -> ConfusionCounts:
    if pred.bits.shape != gt.bits.shape:
        raise ValueError(
            f"shape mismatch: {pred.bits.shape} vs {gt.bits.shape}"
        )
    p, g = pred.bits, gt.bits
    tp = int(np.logical_and(p, g).sum())
    fp = int(np.logical_and(p, ~g).sum())
    fn = int(np.logical_and(~p, g).sum())
    tn = int(np.logical_and(~p, ~g).sum())
    return ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=tn)


def _safe_div(num: float, den: float) -> float:
    return num / den if den > 0 else 0.0


def recall(c: ConfusionCounts) -> float:
    return _safe_div(c.tp, c.tp + c.fn)


def precision(c: ConfusionCounts) -> float:
    return _safe_div(c.tp, c.tp + c.fp)


def f1(c: ConfusionCounts) -> float:
    return _safe_div(2 * c.tp, 2 * c.tp + c.fp + c.fn)


def iou_dataset(cs: list[ConfusionCounts]) -> float:
    """Pool counts across samples first, then TP / (TP + FP + FN)."""
    tp = sum(c.tp for c in cs)
    fp = sum(c.fp for c in cs)
    fn = sum(c.fn for c in cs)
    return _safe_div(tp, tp + fp + fn)


def g_iou(per_sample: list[tuple[BinaryLabel, BinaryLabel]], eps: float = GIOU_EPS) -> float:
    """Mean per-sample |pred & gt| / (|pred | gt| + eps)."""
    if not per_sample:
        return 0.0
    vals = []
    for pred, gt in per_sample:
        if pred.bits.shape != gt.bits.shape:
            raise ValueError("per-sample shape mismatch")
        inter = int(np.logical_and(pred.bits, gt.bits).sum())
        union = int(np.logical_or(pred.bits, gt.bits).sum())
        vals.append(inter / (union + eps))
    return float(np.mean(vals))


def auc(
    prob_maps: list[FloatMap],
    gts: list[BinaryLabel],
    n_thresholds: int = AUC_THRESHOLDS,
) -> float:
    """Threshold-swept ROC area over the pooled pixels of all samples.

    (FPR, TPR) is evaluated at n_thresholds evenly spaced cuts in [0, 1]
    plus the all-positive / all-negative extremes, then integrated by
    trapezoid over FPR.
    """
    if len(prob_maps) != len(gts):
        raise ValueError("prob_maps and gts lengths differ")
    pos_chunks, neg_chunks = [], []
    for pm, gt in zip(prob_maps, gts):
        if pm.values.shape != gt.bits.shape:
            raise ValueError("probability map and ground truth shapes differ")
        pos_chunks.append(pm.values[gt.bits])
        neg_chunks.append(pm.values[~gt.bits])
    pos = np.sort(np.concatenate(pos_chunks)) if pos_chunks else np.array([])
    neg = np.sort(np.concatenate(neg_chunks)) if neg_chunks else np.array([])
    if len(pos) == 0 or len(neg) == 0:
        raise ValueError("ground truth pool must contain both classes")
    ts = np.concatenate(([-np.inf], np.linspace(0.0, 1.0, n_thresholds), [np.inf]))
    # prediction is positive when prob > t; both rates fall as t rises, so
    # reversing yields the ROC with ascending FPR and ties traversed upward
    tpr = (len(pos) - np.searchsorted(pos, ts, side="right")) / len(pos)
    fpr = (len(neg) - np.searchsorted(neg, ts, side="right")) / len(neg)
    return float(np.trapezoid(tpr[::-1], fpr[::-1]))


def topk_accuracy(
    scores: list[np.ndarray], gt_sets: list[set[int]], k: int
) -> float:
    """Fraction of samples whose top-k classes intersect the ground truth.

    Ties between equal scores are broken by ascending class index.
    """
    if not scores:
        return 0.0
    if len(scores) != len(gt_sets):
        raise ValueError("scores and gt_sets lengths differ")
    correct = 0
    for vec, gt in zip(scores, gt_sets):
        if not gt:
            raise ValueError("ground-truth class set must be nonempty")
        vec = np.asarray(vec, dtype=np.float64)
        order = np.argsort(-vec, kind="stable")
        if gt.intersection(order[:k].tolist()):
            correct += 1
    return correct / len(scores)
