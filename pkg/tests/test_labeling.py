import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tamperlab.labeling import (
    SizeBucket,
    diff_map,
    edit_magnitude_check,
    overlap_ratio,
    pixel_semantic_check,
    size_bucket,
    threshold_label,
)
from tamperlab.raster import BinaryLabel, FloatMap, ImageRaster


def rgb(arr):
    return ImageRaster(np.asarray(arr, dtype=np.float64))


def random_diff(seed, shape=(6, 6)):
    return FloatMap(np.random.default_rng(seed).random(shape))


class TestDiffMap:
    def test_identical_images_zero(self):
        img = rgb(np.random.default_rng(0).random((4, 4, 3)))
        assert np.all(diff_map(img, img).values == 0.0)

    def test_channel_max(self):
        a = np.zeros((1, 1, 3))
        b = np.array([[[0.2, 0.0, 0.1]]])
        assert diff_map(rgb(a), rgb(b)).values[0, 0] == pytest.approx(0.2)

    def test_extremal(self):
        a = rgb(np.zeros((3, 3, 3)))
        b = rgb(np.ones((3, 3, 3)))
        assert np.all(diff_map(a, b).values == 1.0)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            diff_map(rgb(np.zeros((2, 2, 3))), rgb(np.zeros((2, 3, 3))))

    def test_mean_and_luma_reductions(self):
        a = np.zeros((1, 1, 3))
        b = np.array([[[0.3, 0.0, 0.0]]])
        assert diff_map(rgb(a), rgb(b), reduce="mean").values[0, 0] == pytest.approx(0.1)
        assert diff_map(rgb(a), rgb(b), reduce="luma").values[0, 0] == pytest.approx(
            0.3 * 0.299
        )

    @given(st.integers(0, 10**6))
    def test_symmetry(self, seed):
        rng = np.random.default_rng(seed)
        a, b = rgb(rng.random((3, 4, 3))), rgb(rng.random((3, 4, 3)))
        assert np.array_equal(diff_map(a, b).values, diff_map(b, a).values)

    @given(st.integers(0, 10**6))
    def test_triangle_bound(self, seed):
        rng = np.random.default_rng(seed)
        a, b, c = (rgb(rng.random((3, 3, 3))) for _ in range(3))
        lhs = diff_map(a, c).values
        rhs = diff_map(a, b).values + diff_map(b, c).values
        assert np.all(lhs <= rhs + 1e-12)


class TestThreshold:
    def test_zero_diff_all_false(self):
        label = threshold_label(FloatMap(np.zeros((3, 3))), 0.05)
        assert label.count() == 0

    def test_boundary_is_strict(self):
        label = threshold_label(FloatMap(np.full((2, 2), 0.05)), 0.05)
        assert label.count() == 0

    def test_just_above_boundary(self):
        label = threshold_label(FloatMap(np.full((2, 2), np.nextafter(0.05, 1))), 0.05)
        assert label.count() == 4

    @given(st.integers(0, 10**6))
    def test_monotone_in_tau(self, seed):
        diff = random_diff(seed)
        m05 = threshold_label(diff, 0.05).bits
        m10 = threshold_label(diff, 0.1).bits
        m20 = threshold_label(diff, 0.2).bits
        assert np.all(m10 <= m05) and np.all(m20 <= m10)

    def test_tau_range_checked(self):
        with pytest.raises(ValueError):
            threshold_label(FloatMap(np.zeros((2, 2))), 1.5)


class TestMagnitudeCheck:
    @pytest.mark.parametrize(
        "size,expected",
        [
            (0, False),
            (2479, False),
            (2480, True),
            (100000, True),
            (184500, True),
            (184501, False),
            (200000, False),
        ],
    )
    def test_bounds(self, size, expected):
        verdict = edit_magnitude_check(size)
        assert verdict.passed is expected
        assert verdict.measured == size


class TestOverlap:
    def test_identical_masks(self):
        bits = np.random.default_rng(0).random((4, 4)) > 0.5
        m = BinaryLabel(bits)
        assert overlap_ratio(m, m) == 1.0

    def test_disjoint(self):
        a = np.zeros((2, 2), dtype=bool)
        a[0, 0] = True
        b = np.zeros((2, 2), dtype=bool)
        b[1, 1] = True
        assert overlap_ratio(BinaryLabel(a), BinaryLabel(b)) == 0.0

    def test_hand_counted_case(self):
        # guide: left 8 pixels of a 4x4; label: 3 of those plus 2 outside
        guide = np.zeros((4, 4), dtype=bool)
        guide[:, :2] = True
        label = np.zeros((4, 4), dtype=bool)
        label[0, 0] = label[1, 0] = label[2, 1] = True
        label[0, 3] = label[3, 2] = True
        assert overlap_ratio(BinaryLabel(label), BinaryLabel(guide)) == pytest.approx(
            3 / 8
        )

    def test_empty_guide_rejected(self):
        m = BinaryLabel(np.ones((2, 2), dtype=bool))
        with pytest.raises(ValueError):
            overlap_ratio(m, BinaryLabel(np.zeros((2, 2), dtype=bool)))

    @given(st.integers(0, 10**6))
    def test_ratio_in_unit_interval_and_subset_rule(self, seed):
        rng = np.random.default_rng(seed)
        label = rng.random((4, 4)) > 0.4
        guide = rng.random((4, 4)) > 0.6
        if not guide.any():
            guide[0, 0] = True
        r = overlap_ratio(BinaryLabel(label), BinaryLabel(guide))
        assert 0.0 <= r <= 1.0
        assert (r == 1.0) == bool(np.all(label[guide]))


class TestSemanticCheck:
    @pytest.mark.parametrize(
        "ratio,expected", [(0.375, True), (0.10, False), (0.20, True), (0.19, False)]
    )
    def test_gate(self, ratio, expected):
        assert pixel_semantic_check(ratio).passed is expected


class TestLabelArtifacts:
    def test_consistent_construction(self):
        from tamperlab.labeling import LabelArtifacts, label_artifacts

        rng = np.random.default_rng(0)
        a, b = rgb(rng.random((4, 4, 3))), rgb(rng.random((4, 4, 3)))
        art = label_artifacts(a, b, tau=0.1)
        assert art.tampered_size == art.label.count()

    def test_inconsistent_label_rejected(self):
        from tamperlab.labeling import LabelArtifacts

        diff = FloatMap(np.full((2, 2), 0.5))
        wrong = BinaryLabel(np.zeros((2, 2), dtype=bool))
        with pytest.raises(ValueError):
            LabelArtifacts(diff=diff, label=wrong, tau=0.05, tampered_size=0)

    def test_inconsistent_size_rejected(self):
        from tamperlab.labeling import LabelArtifacts

        diff = FloatMap(np.full((2, 2), 0.5))
        label = threshold_label(diff, 0.05)
        with pytest.raises(ValueError):
            LabelArtifacts(diff=diff, label=label, tau=0.05, tampered_size=1)


class TestSizeBucket:
    @pytest.mark.parametrize(
        "size,bucket",
        [
            (0, SizeBucket.SMALL),
            (22999, SizeBucket.SMALL),
            (23000, SizeBucket.MEDIUM),
            (49999, SizeBucket.MEDIUM),
            (50000, SizeBucket.LARGE),
            (10**7, SizeBucket.LARGE),
        ],
    )
    def test_boundaries(self, size, bucket):
        assert size_bucket(size) is bucket
