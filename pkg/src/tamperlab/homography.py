"""Robust projective model fitting from point correspondences.

A minimal 4-point DLT solve runs inside a RANSAC loop with a fixed seed;
the winning consensus set is refit by a normalized least-squares DLT over
all inliers.  Reprojection error is measured in the destination frame.
"""

from __future__ import annotations

import numpy as np

from .features import Correspondence
from .raster import Homography

RANSAC_ITERATIONS = 2000
INLIER_PX = 3.0
MIN_CONSENSUS = 8
RANSAC_CONFIDENCE = 0.99


class NoConsensusError(RuntimeError):
    """RANSAC found no model with enough inliers."""


def _normalize_points(pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Hartley normalization: centroid at origin, mean distance sqrt(2).
    centroid = pts.mean(axis=0)
    d = np.sqrt(((pts - centroid) ** 2).sum(axis=1)).mean()
    s = np.sqrt(2.0) / max(d, 1e-12)
    t = np.array(
        [[s, 0.0, -s * centroid[0]], [0.0, s, -s * centroid[1]], [0.0, 0.0, 1.0]]
    )
    ph = np.c_[pts, np.ones(len(pts))]
    return (ph @ t.T)[:, :2], t


def _dlt(src: np.ndarray, dst: np.ndarray) -> np.ndarray | None:
    """Normalized direct linear transform; None on a degenerate system."""
    src_n, t_src = _normalize_points(src)
    dst_n, t_dst = _normalize_points(dst)
    n = len(src)
    x, y = src_n[:, 0], src_n[:, 1]
    u, v = dst_n[:, 0], dst_n[:, 1]
    zeros = np.zeros(n)
    ones = np.ones(n)
    a = np.empty((2 * n, 9))
    a[0::2] = np.c_[x, y, ones, zeros, zeros, zeros, -u * x, -u * y, -u]
    a[1::2] = np.c_[zeros, zeros, zeros, x, y, ones, -v * x, -v * y, -v]
    try:
        _, sv, vt = np.linalg.svd(a)
    except np.linalg.LinAlgError:
        return None
    if sv[-2] < 1e-10:
        return None
    h_n = vt[-1].reshape(3, 3)
    if abs(h_n[2, 2]) < 1e-12:
        return None
    h = np.linalg.inv(t_dst) @ h_n @ t_src
    if abs(np.linalg.det(h)) < 1e-12:
        return None
    return h / h[2, 2]


def _reprojection_errors(h: np.ndarray, src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    ph = np.c_[src, np.ones(len(src))]
    q = ph @ h.T
    w = q[:, 2]
    bad = np.abs(w) < 1e-12
    w = np.where(bad, 1.0, w)
    proj = q[:, :2] / w[:, None]
    err = np.sqrt(((proj - dst) ** 2).sum(axis=1))
    err[bad] = np.inf
    return err


def _degenerate(pts: np.ndarray) -> bool:
    # Any collinear triple among the 4 sampled points kills the solve.
    for i, j, k in ((0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)):
        a, b, c = pts[i], pts[j], pts[k]
        area2 = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        if abs(area2) < 1e-6:
            return True
    return False


def estimate_homography_ransac(
    matches: list[Correspondence],
    iterations: int = RANSAC_ITERATIONS,
    inlier_px: float = INLIER_PX,
    seed: int = 0,
    min_consensus: int = MIN_CONSENSUS,
) -> tuple[Homography, np.ndarray]:
    """Fit src -> dst projectively; returns the model and inlier indices.

    The search is deterministic under `seed`.  Raises NoConsensusError when
    the best sample supports fewer than `min_consensus` inliers.  Every
    returned inlier has reprojection error < inlier_px under the returned
    (refit) model.
    """
    if len(matches) < 4:
        raise ValueError(f"need at least 4 matches, got {len(matches)}")
    src = np.array([m.src for m in matches], dtype=np.float64)
    dst = np.array([m.dst for m in matches], dtype=np.float64)
    n = len(matches)
    rng = np.random.default_rng(seed)

    best_h = None
    best_inl = None
    best_count = 0
    best_err = np.inf
    needed = iterations
    it = 0
    while it < min(iterations, needed):
        it += 1
        idx = rng.choice(n, size=4, replace=False)
        if _degenerate(src[idx]) or _degenerate(dst[idx]):
            continue
        h = _dlt(src[idx], dst[idx])
        if h is None:
            continue
        err = _reprojection_errors(h, src, dst)
        inl = err < inlier_px
        count = int(inl.sum())
        mean_err = float(err[inl].mean()) if count else np.inf
        if count > best_count or (count == best_count and mean_err < best_err):
            best_h, best_inl, best_count, best_err = h, inl, count, mean_err
            w = count / n
            if 0.0 < w < 1.0:
                denom = np.log1p(-(w**4))
                if denom < 0:
                    needed = int(np.ceil(np.log(1.0 - RANSAC_CONFIDENCE) / denom))
    if best_h is None or best_count < min_consensus:
        raise NoConsensusError(
            f"best consensus {best_count} below minimum {min_consensus}"
        )

    # Least-squares refit over the consensus set; keep the refinement only
    # while it preserves a valid consensus.
    h, inl = best_h, best_inl
    for _ in range(2):
        refit = _dlt(src[inl], dst[inl])
        if refit is None:
            break
        err = _reprojection_errors(refit, src, dst)
        new_inl = err < inlier_px
        if int(new_inl.sum()) < min_consensus:
            break
        h, inl = refit, new_inl
    return Homography(h), np.nonzero(inl)[0]
