"""Spatial-concentration scoring of binary tamper labels.

Two scalars summarize how compact a label is: the fraction of grid cells
needed to cover most of the tampered pixels (global compactness) and the
median windowed density at tampered pixels (local coherence).  A fixed
decision table maps the pair to Concentrated or Diverse; Diverse labels
are dropped by the curation pipeline.
"""

from __future__ import annotations

import dataclasses
import enum
import math

import numpy as np

from .raster import BinaryLabel

GRID_N = 10
COVERAGE = 0.8
DENSITY_WINDOW = 7

GRID_CONCENTRATED_MAX = 0.20
GRID_DIVERSE_MIN = 0.50
DENSITY_CONCENTRATED_MIN = 0.35
DENSITY_DIVERSE_MAX = 0.25
TIE_BREAK_MAX = 0.25


class ConcentrationClass(enum.Enum):
    CONCENTRATED = "concentrated"
    DIVERSE = "diverse"


@dataclasses.dataclass(frozen=True)
class ConcentrationScores:
    r_grid: float
    r_dens: float

    @property
    def tie_break(self) -> float:
        return self.r_grid * (1.0 - self.r_dens)


def grid_coverage_ratio(
    mask: BinaryLabel, grid_n: int = GRID_N, coverage: float = COVERAGE
) -> float:
    """Smallest fraction of grid cells covering `coverage` of tampered pixels.

    The mask is partitioned into grid_n x grid_n cells (edge cells absorb
    remainders); cells are taken greedily by descending count, ties broken
    by row-major cell index, until at least ceil(coverage * total) pixels
    are covered.
    """
    bits = mask.bits
    total = int(bits.sum())
    if total == 0:
        raise ValueError("mask is empty")
    h, w = bits.shape
    rows, cols = np.nonzero(bits)
    cell_r = np.minimum(rows // max(1, h // grid_n), grid_n - 1)
    cell_c = np.minimum(cols // max(1, w // grid_n), grid_n - 1)
    counts = np.bincount(cell_r * grid_n + cell_c, minlength=grid_n * grid_n)
    order = np.lexsort((np.arange(counts.size), -counts))
    target = math.ceil(coverage * total)
    cum = np.cumsum(counts[order])
    cells_used = int(np.searchsorted(cum, target, side="left")) + 1
    return cells_used / (grid_n * grid_n)


def _window_counts(bits: np.ndarray, window: int) -> np.ndarray:
    # Zero-padded box sum via a summed-area table; exact integer counts.
    h, w = bits.shape
    half = window // 2
    sat = np.zeros((h + 1, w + 1), dtype=np.int64)
    sat[1:, 1:] = np.cumsum(np.cumsum(bits.astype(np.int64), axis=0), axis=1)
    r0 = np.clip(np.arange(h) - half, 0, h)
    r1 = np.clip(np.arange(h) + half + 1, 0, h)
    c0 = np.clip(np.arange(w) - half, 0, w)
    c1 = np.clip(np.arange(w) + half + 1, 0, w)
    return (
        sat[r1[:, None], c1[None, :]]
        - sat[r0[:, None], c1[None, :]]
        - sat[r1[:, None], c0[None, :]]
        + sat[r0[:, None], c0[None, :]]
    )


def local_density(
    mask: BinaryLabel, window: int = DENSITY_WINDOW, sample_at_tampered: bool = True
) -> float:
    """Median mean-filtered density, sampled at tampered pixels.

    The mean filter is zero-padded, so borders are diluted by the padding.
    The median of an even-length list is the lower middle element.  Setting
    sample_at_tampered=False takes the median over all pixels instead.
    """
    if window < 1 or window % 2 == 0:
        raise ValueError("window must be odd and positive")
    bits = mask.bits
    if not bits.any():
        raise ValueError("mask is empty")
    density = _window_counts(bits, window) / float(window * window)
    values = density[bits] if sample_at_tampered else density.ravel()
    values = np.sort(values)
    return float(values[(len(values) - 1) // 2])


def concentration_scores(mask: BinaryLabel) -> ConcentrationScores:
    return ConcentrationScores(
        r_grid=grid_coverage_ratio(mask), r_dens=local_density(mask)
    )


def classify_concentration(scores: ConcentrationScores) -> ConcentrationClass:
    """Decision table over (r_grid, r_dens) with the tie-break product."""
    if scores.r_grid <= GRID_CONCENTRATED_MAX:
        return ConcentrationClass.CONCENTRATED
    if scores.r_grid >= GRID_DIVERSE_MIN:
        return ConcentrationClass.DIVERSE
    if scores.r_dens >= DENSITY_CONCENTRATED_MIN:
        return ConcentrationClass.CONCENTRATED
    if scores.r_dens <= DENSITY_DIVERSE_MAX:
        return ConcentrationClass.DIVERSE
    if scores.tie_break <= TIE_BREAK_MAX:
        return ConcentrationClass.CONCENTRATED
    return ConcentrationClass.DIVERSE
