"""Reference loss kernels with analytic gradients.

Five scalar losses drive a tamper detector: multi-label semantic sigmoid
cross-entropy, pixel-wise BCE against the binary label, a Dice term, a
two-class global detection cross-entropy, and a summed token-level
language-modeling loss.  Each returns its value together with the exact
gradient w.r.t. the differentiated argument so external training stacks
can be cross-checked by finite differences.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .raster import BinaryLabel, FloatMap

PROB_CLAMP = 1e-7
DICE_EPS = 1e-6


@dataclasses.dataclass(frozen=True)
class LossWeights:
    lambda_sem: float = 0.5
    lambda_bce: float = 1.0
    lambda_dice: float = 1.0
    lambda_text: float = 3.0
    lambda_cls: float = 1.0

    def __post_init__(self):
        for f in dataclasses.fields(self):
            if getattr(self, f.name) <= 0:
                raise ValueError(f"{f.name} must be strictly positive")


@dataclasses.dataclass(frozen=True)
class LossOutput:
    value: float
    gradient: np.ndarray

    def __post_init__(self):
        if not np.isfinite(self.value):
            raise ValueError("loss value is not finite")
        if not np.all(np.isfinite(self.gradient)):
            raise ValueError("loss gradient is not finite")


def _softplus(z: np.ndarray) -> np.ndarray:
    # log(1 + e^z), stable for large |z|
    return np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _log_softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def loss_sem(logits_z: np.ndarray, y: np.ndarray) -> LossOutput:
    """Per-class sigmoid cross-entropy, averaged over the class set."""
    z = np.asarray(logits_z, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if z.shape != y.shape:
        raise ValueError("logits and targets must have equal length")
    n = z.size
    value = float(np.sum(_softplus(z) - y * z)) / n
    grad = (_sigmoid(z) - y) / n
    return LossOutput(value=value, gradient=grad)


def loss_bce_pixel(pred_prob: FloatMap, label: BinaryLabel) -> LossOutput:
    """Pixel-wise binary cross-entropy against the binary label.

    Probabilities are clamped to [1e-7, 1 - 1e-7] before the logs; the
    gradient is taken w.r.t. the clamped probabilities.
    """
    if pred_prob.values.shape != label.bits.shape:
        raise ValueError("prediction and label shapes differ")
    p = np.clip(pred_prob.values, PROB_CLAMP, 1.0 - PROB_CLAMP)
    m = label.bits.astype(np.float64)
    n = p.size
    value = float(-np.sum(m * np.log(p) + (1.0 - m) * np.log(1.0 - p))) / n
    grad = (-m / p + (1.0 - m) / (1.0 - p)) / n
    return LossOutput(value=value, gradient=grad.ravel())


def loss_dice(
    pred_prob: FloatMap, label: BinaryLabel, eps: float = DICE_EPS
) -> LossOutput:
    """1 - (2 sum(p*m) + eps) / (sum(p) + sum(m) + eps)."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if pred_prob.values.shape != label.bits.shape:
        raise ValueError("prediction and label shapes differ")
    p = pred_prob.values
    m = label.bits.astype(np.float64)
    num = 2.0 * float(np.sum(p * m)) + eps
    den = float(np.sum(p) + np.sum(m)) + eps
    value = 1.0 - num / den
    # d/dp_i of num/den = (2 m_i * den - num) / den^2
    grad = -(2.0 * m * den - num) / (den * den)
    return LossOutput(value=value, gradient=grad.ravel())


def loss_cls(logits_u: np.ndarray, d: np.ndarray) -> LossOutput:
    """Two-class softmax cross-entropy for the real/tampered head."""
    u = np.asarray(logits_u, dtype=np.float64).ravel()
    d = np.asarray(d, dtype=np.float64).ravel()
    if u.shape != (2,) or d.shape != (2,):
        raise ValueError("expected 2-vectors")
    if sorted(d.tolist()) != [0.0, 1.0]:
        raise ValueError("d must be one-hot")
    log_p = _log_softmax(u)
    value = float(-np.sum(d * log_p))
    grad = np.exp(log_p) - d
    return LossOutput(value=value, gradient=grad)


def loss_text(token_logits: np.ndarray, target_ids: np.ndarray) -> LossOutput:
    """Summed negative log-likelihood of the target token sequence."""
    logits = np.asarray(token_logits, dtype=np.float64)
    ids = np.asarray(target_ids, dtype=np.int64).ravel()
    if logits.ndim != 2 or logits.shape[0] != ids.size:
        raise ValueError("token_logits must be LxV with one target per row")
    if ids.size and (ids.min() < 0 or ids.max() >= logits.shape[1]):
        raise IndexError("target id out of vocabulary range")
    log_p = _log_softmax(logits)
    rows = np.arange(ids.size)
    value = float(-np.sum(log_p[rows, ids]))
    grad = np.exp(log_p)
    grad[rows, ids] -= 1.0
    return LossOutput(value=value, gradient=grad.ravel())


def loss_total(
    sem: float,
    bce: float,
    dice: float,
    text: float,
    cls: float,
    w: LossWeights = LossWeights(),
) -> float:
    """Weighted combination of the five loss values."""
    parts = (sem, bce, dice, text, cls)
    if not all(np.isfinite(parts)):
        raise ValueError("all loss parts must be finite")
    return (
        w.lambda_sem * sem
        + w.lambda_bce * bce
        + w.lambda_dice * dice
        + w.lambda_text * text
        + w.lambda_cls * cls
    )
