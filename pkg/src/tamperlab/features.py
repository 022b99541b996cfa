"""Sparse feature detection and matching for image alignment.

Corner detection follows the segment-test scheme: a pixel is a corner when
at least 9 contiguous positions on a radius-3 circle of 16 samples are all
brighter or all darker than the center by a threshold.  Each surviving
corner gets an orientation from the patch intensity centroid and a 256-bit
binary descriptor of pairwise intensity comparisons, steered by that
orientation.  Descriptors are matched by Hamming distance with a ratio
test.  Everything is plain numpy; no external vision library is involved.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .raster import ImageRaster, to_gray

FAST_THRESHOLD = 0.06
FAST_ARC = 9
PATCH_RADIUS = 15
PATTERN_RADIUS = 13
KEYPOINT_MARGIN = 16
DESCRIPTOR_BITS = 256
RATIO_TEST = 0.8
MIN_MATCHES = 8

# (dr, dc) offsets of the 16-pixel Bresenham circle, radius 3, clockwise.
CIRCLE16 = np.array(
    [
        (-3, 0), (-3, 1), (-2, 2), (-1, 3),
        (0, 3), (1, 3), (2, 2), (3, 1),
        (3, 0), (3, -1), (2, -2), (1, -3),
        (0, -3), (-1, -3), (-2, -2), (-3, -1),
    ],
    dtype=np.int64,
)

_POPCOUNT = np.unpackbits(np.arange(256, dtype=np.uint8)[:, None], axis=1).sum(
    axis=1
).astype(np.uint8)


def _make_pattern(n_bits: int, radius: float, seed: int = 12345) -> tuple[np.ndarray, np.ndarray]:
    # Fixed comparison-pair layout; norm-clamped so rotated points stay in the patch.
    rng = np.random.default_rng(seed)
    pts = rng.normal(0.0, radius / 2.0, size=(2 * n_bits, 2))
    norms = np.linalg.norm(pts, axis=1)
    too_far = norms > radius
    pts[too_far] *= (radius / norms[too_far])[:, None]
    return pts[:n_bits], pts[n_bits:]


_PATTERN_A, _PATTERN_B = _make_pattern(DESCRIPTOR_BITS, PATTERN_RADIUS)


class TooFewMatchesError(RuntimeError):
    """Not enough reliable correspondences to attempt model fitting."""


@dataclasses.dataclass(frozen=True)
class Correspondence:
    """One match: src is an (x, y) point in the generated image, dst in the original."""

    src: tuple[float, float]
    dst: tuple[float, float]
    score: float


def _box_blur(gray: np.ndarray, radius: int = 2) -> np.ndarray:
    h, w = gray.shape
    k = 2 * radius + 1
    sat = np.zeros((h + 1, w + 1), dtype=np.float64)
    sat[1:, 1:] = np.cumsum(np.cumsum(gray, axis=0), axis=1)
    r0 = np.clip(np.arange(h) - radius, 0, h)
    r1 = np.clip(np.arange(h) + radius + 1, 0, h)
    c0 = np.clip(np.arange(w) - radius, 0, w)
    c1 = np.clip(np.arange(w) + radius + 1, 0, w)
    sums = (
        sat[r1[:, None], c1[None, :]]
        - sat[r0[:, None], c1[None, :]]
        - sat[r1[:, None], c0[None, :]]
        + sat[r0[:, None], c0[None, :]]
    )
    area = (r1 - r0)[:, None] * (c1 - c0)[None, :]
    return sums / area


def _has_arc(mask16: np.ndarray, arc: int) -> np.ndarray:
    # A set bit survives iff bits k..k+arc-1 (circular) are all set.
    acc = mask16.copy()
    for s in range(1, arc):
        acc &= ((mask16 >> s) | (mask16 << (16 - s))) & 0xFFFF
    return acc != 0


def detect_corners(
    gray: np.ndarray,
    threshold: float = FAST_THRESHOLD,
    max_keypoints: int = 500,
    margin: int = KEYPOINT_MARGIN,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Segment-test corners with 3x3 non-max suppression.

    Returns (rows, cols, scores) of at most max_keypoints corners, strongest
    first, all at least `margin` pixels from the border.
    """
    h, w = gray.shape
    if h <= 2 * margin or w <= 2 * margin:
        return np.array([], dtype=np.int64), np.array([], dtype=np.int64), np.array([])
    center = gray[3 : h - 3, 3 : w - 3]
    bright = np.zeros(center.shape, dtype=np.uint32)
    dark = np.zeros(center.shape, dtype=np.uint32)
    strength = np.zeros(center.shape, dtype=np.float64)
    for k, (dr, dc) in enumerate(CIRCLE16):
        ring = gray[3 + dr : h - 3 + dr, 3 + dc : w - 3 + dc]
        d = ring - center
        bright |= (d > threshold).astype(np.uint32) << k
        dark |= (d < -threshold).astype(np.uint32) << k
        strength += np.maximum(np.abs(d) - threshold, 0.0)
    corner = _has_arc(bright, FAST_ARC) | _has_arc(dark, FAST_ARC)
    score = np.zeros((h, w), dtype=np.float64)
    score[3 : h - 3, 3 : w - 3] = strength * corner

    from scipy.ndimage import maximum_filter

    keep = (score > 0) & (score == maximum_filter(score, size=3))
    keep[:margin, :] = False
    keep[h - margin :, :] = False
    keep[:, :margin] = False
    keep[:, w - margin :] = False
    rows, cols = np.nonzero(keep)
    scores = score[rows, cols]
    order = np.argsort(-scores, kind="stable")[:max_keypoints]
    return rows[order], cols[order], scores[order]


def _orientations(smooth: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    dy, dx = np.mgrid[-PATCH_RADIUS : PATCH_RADIUS + 1, -PATCH_RADIUS : PATCH_RADIUS + 1]
    disc = (dy * dy + dx * dx) <= PATCH_RADIUS * PATCH_RADIUS
    dyf, dxf = dy[disc], dx[disc]
    patches = smooth[rows[:, None] + dyf[None, :], cols[:, None] + dxf[None, :]]
    m01 = patches @ dyf.astype(np.float64)
    m10 = patches @ dxf.astype(np.float64)
    return np.arctan2(m01, m10)


def _sample(smooth, rows, cols, xs, ys):
    ri = rows[:, None] + np.rint(ys).astype(np.int64)
    ci = cols[:, None] + np.rint(xs).astype(np.int64)
    return smooth[ri, ci]


def compute_descriptors(
    gray: np.ndarray, rows: np.ndarray, cols: np.ndarray
) -> np.ndarray:
    """Orientation-steered 256-bit descriptors, packed into (N, 32) uint8."""
    smooth = _box_blur(gray, radius=2)
    theta = _orientations(smooth, rows, cols)
    cos, sin = np.cos(theta)[:, None], np.sin(theta)[:, None]
    ax, ay = _PATTERN_A[:, 0][None, :], _PATTERN_A[:, 1][None, :]
    bx, by = _PATTERN_B[:, 0][None, :], _PATTERN_B[:, 1][None, :]
    va = _sample(smooth, rows, cols, cos * ax - sin * ay, sin * ax + cos * ay)
    vb = _sample(smooth, rows, cols, cos * bx - sin * by, sin * bx + cos * by)
    return np.packbits(va < vb, axis=1)


def hamming_distances(d1: np.ndarray, d2: np.ndarray) -> np.ndarray:
    """(N1, N2) matrix of Hamming distances between packed descriptors."""
    xored = d1[:, None, :] ^ d2[None, :, :]
    return _POPCOUNT[xored].sum(axis=2, dtype=np.int32)


def match_descriptors(
    d_src: np.ndarray, d_dst: np.ndarray, ratio: float = RATIO_TEST
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Nearest-neighbor matches passing the ratio test.

    Returns (src_idx, dst_idx, distances).
    """
    if len(d_src) == 0 or len(d_dst) == 0:
        return np.array([], dtype=np.int64), np.array([], dtype=np.int64), np.array([])
    dist = hamming_distances(d_src, d_dst)
    best_j = np.argmin(dist, axis=1)
    best = dist[np.arange(len(d_src)), best_j]
    if dist.shape[1] >= 2:
        two = np.partition(dist, 1, axis=1)[:, :2]
        second = two[:, 1]
        ok = best < ratio * second
    else:
        ok = np.ones(len(d_src), dtype=bool)
    src_idx = np.nonzero(ok)[0]
    return src_idx, best_j[src_idx], best[src_idx].astype(np.float64)


def detect_and_match(
    orig: ImageRaster,
    gen: ImageRaster,
    max_features: int = 500,
    threshold: float = FAST_THRESHOLD,
    ratio: float = RATIO_TEST,
) -> list[Correspondence]:
    """Corner matches from the generated image into the original.

    Raises TooFewMatchesError when fewer than 8 matches survive the ratio
    test; callers treat that as the signal to fall back to the unaligned
    image.
    """
    gray_orig = to_gray(orig).values
    gray_gen = to_gray(gen).values
    r_g, c_g, _ = detect_corners(gray_gen, threshold, max_keypoints=max_features)
    r_o, c_o, _ = detect_corners(gray_orig, threshold, max_keypoints=max_features)
    if len(r_g) == 0 or len(r_o) == 0:
        raise TooFewMatchesError("no corners detected")
    d_g = compute_descriptors(gray_gen, r_g, c_g)
    d_o = compute_descriptors(gray_orig, r_o, c_o)
    si, di, dist = match_descriptors(d_g, d_o, ratio=ratio)
    if len(si) < MIN_MATCHES:
        raise TooFewMatchesError(f"only {len(si)} matches survived the ratio test")
    scores = 1.0 - dist / DESCRIPTOR_BITS
    order = np.argsort(-scores, kind="stable")[:max_features]
    return [
        Correspondence(
            src=(float(c_g[si[i]]), float(r_g[si[i]])),
            dst=(float(c_o[di[i]]), float(r_o[di[i]])),
            score=float(scores[i]),
        )
        for i in order
    ]
