"""
Tests for block layout and the CMS, MMD^2, HSIC and CKA estimators.
"""

import math

import numpy as np
import pytest

from src.errors import DegenerateDataError, DegeneratePixelError, InputFormatError, ShapeMismatchError
from src.estimators import (
    EstimatorConfig,
    block_mean,
    block_slices,
    block_statistics,
    cka,
    cms,
    hsic,
    mean_embedding_stats,
    mmd2,
    paired_block_slices,
    single_blocks,
)
from src.kernels import IndexSet, KernelSpec
from src.tensor_io import SampleMatrix
from tests import oracles

FULL_DATA = EstimatorConfig(block_mode=False)


def _matrix(values):
    values = np.asarray(values, dtype=np.float64)
    n, d = values.shape[:2]
    return SampleMatrix.from_array(values, 1, d)


class TestBlocks:
    def test_remainder_dropped(self):
        assert block_slices(10, 4) == [slice(0, 4), slice(4, 8)]

    def test_remainder_kept(self):
        assert block_slices(10, 4, drop_remainder=False) == [slice(0, 4), slice(4, 8), slice(8, 10)]
        assert block_slices(9, 4, drop_remainder=False, min_size=2) == [slice(0, 4), slice(4, 8)]

    def test_pairs_use_min_count(self):
        cfg = EstimatorConfig(cms_batch=3)
        pairs = paired_block_slices(10, 6, cfg)
        assert pairs == [(slice(0, 3), slice(0, 3)), (slice(3, 6), slice(3, 6))]

    def test_empty_block_set(self):
        with pytest.raises(DegenerateDataError, match="empty block set"):
            paired_block_slices(100, 149, EstimatorConfig())

    def test_hsic_blocks_need_two_rows(self):
        with pytest.raises(DegenerateDataError, match="block size < 2"):
            single_blocks(1, FULL_DATA)

    def test_batch_at_least_two(self):
        with pytest.raises(InputFormatError):
            EstimatorConfig(cms_batch=1)

    def test_block_mean_left_to_right(self):
        assert block_mean([0.1, 0.2, 0.3]) == ((0.1 + 0.2) + 0.3) / 3


class TestClosedForm:
    def test_two_points(self):
        spec = KernelSpec("rbf", 1.0)
        X, Y = _matrix([[0.0]]), _matrix([[1.0]])
        full = IndexSet.full(1)
        assert abs(cms(spec, full, X, Y, FULL_DATA) - math.exp(-1.0)) <= 1e-15
        assert abs(mmd2(spec, full, X, Y, FULL_DATA) - (2.0 - 2.0 * math.exp(-1.0))) <= 1e-15

    def test_self_similarity(self, small_pair, rbf):
        X, _ = small_pair
        full = IndexSet.full(X.d)
        assert cms(rbf, full, X, X, EstimatorConfig(cms_batch=10)) == 1.0
        assert mmd2(rbf, full, X, X, EstimatorConfig(cms_batch=10)) <= 1e-12

    def test_cms_at_most_one(self, small_pair, rbf):
        X, Y = small_pair
        value = cms(rbf, IndexSet.full(X.d), X, Y, EstimatorConfig(cms_batch=20))
        assert 0.0 < value <= 1.0

    def test_block_average_matches_manual(self, small_pair, rbf):
        X, Y = small_pair
        subset = IndexSet.of([0, 3])
        cfg = EstimatorConfig(cms_batch=15)
        manual = [
            mean_embedding_stats(rbf, subset, X.take(0, 15), Y.take(0, 15)).cms,
            mean_embedding_stats(rbf, subset, X.take(15, 30), Y.take(15, 30)).cms,
        ]
        assert len(block_statistics(rbf, subset, X, Y, cfg)) == 2
        assert cms(rbf, subset, X, Y, cfg) == pytest.approx(sum(manual) / 2, rel=1e-14)

    def test_stats_of_two_against_one(self):
        spec = KernelSpec("rbf", 1.0)
        X, Y = _matrix([[0.0], [1.0]]), _matrix([[0.0]])
        stats = mean_embedding_stats(spec, IndexSet.full(1), X, Y)
        assert stats.xx == pytest.approx((2.0 + 2.0 * math.exp(-1.0)) / 4, abs=1e-15)
        assert stats.xy == pytest.approx((1.0 + math.exp(-1.0)) / 2, abs=1e-15)
        assert stats.yy == 1.0
        assert stats.xy ** 2 <= stats.xx * stats.yy

    def test_stats_satisfy_cauchy_schwarz(self, rng):
        spec = KernelSpec("laplacian", 0.7)
        for _ in range(20):
            X = SampleMatrix.from_array(rng.normal(size=(12, 3)), 1, 3)
            Y = SampleMatrix.from_array(rng.normal(0.5, 2.0, size=(9, 3)), 1, 3)
            stats = mean_embedding_stats(spec, IndexSet.full(3), X, Y)
            assert stats.xy ** 2 <= stats.xx * stats.yy * (1 + 1e-12)

    def test_mmd2_vanishes_for_small_gamma(self, small_pair):
        X, Y = small_pair
        full = IndexSet.full(X.d)
        values = [mmd2(KernelSpec("rbf", g), full, X, Y, FULL_DATA) for g in (1e-2, 1e-4, 1e-6)]
        assert values[0] > values[1] > values[2] > 0.0
        assert values[2] < 1e-5

    def test_shape_mismatch(self, small_pair, rbf):
        X, _ = small_pair
        other = SampleMatrix.from_array(np.zeros((40, 4)), 1, 4)
        with pytest.raises(ShapeMismatchError):
            cms(rbf, IndexSet.full(4), X, other, EstimatorConfig(cms_batch=10))


class TestOracleEquivalence:
    def test_against_double_sums(self):
        for seed in range(200):
            rng = np.random.default_rng(seed)
            n, m = int(rng.integers(2, 9)), int(rng.integers(2, 9))
            d = int(rng.integers(1, 5))
            family = "rbf" if seed % 2 == 0 else "laplacian"
            gamma = float(rng.uniform(0.1, 1.5))
            spec = KernelSpec(family, gamma)
            Xv, Yv = oracles.random_dataset(rng, n, d), oracles.random_dataset(rng, m, d)
            X, Y = SampleMatrix.from_array(Xv, 1, d), SampleMatrix.from_array(Yv, 1, d)
            full = IndexSet.full(d)
            pixels = list(range(d))

            assert cms(spec, full, X, Y, FULL_DATA) == pytest.approx(
                oracles.cms_oracle(family, gamma, Xv, Yv, pixels), rel=1e-12)
            assert mmd2(spec, full, X, Y, FULL_DATA) == pytest.approx(
                oracles.mmd2_oracle(family, gamma, Xv, Yv, pixels), rel=1e-12, abs=1e-14)

            if d >= 2:
                split = int(rng.integers(1, d))
                a, b = IndexSet.of(range(split)), IndexSet.of(range(split, d))
                pa, pb = list(a), list(b)
            else:
                a = b = full
                pa = pb = pixels
            assert hsic(spec, spec, a, b, X, FULL_DATA) == pytest.approx(
                oracles.hsic_oracle(family, gamma, Xv, pa, pb), rel=1e-12, abs=1e-14)
            assert cka(spec, spec, a, b, X, FULL_DATA) == pytest.approx(
                oracles.cka_oracle(family, gamma, Xv, pa, pb), rel=1e-12, abs=1e-12)

    def test_blocked_against_double_sums(self, rng):
        spec = KernelSpec("rbf", 0.4)
        Xv, Yv = oracles.random_dataset(rng, 12, 3), oracles.random_dataset(rng, 9, 3)
        X, Y = SampleMatrix.from_array(Xv, 1, 3), SampleMatrix.from_array(Yv, 1, 3)
        cfg = EstimatorConfig(cms_batch=4, cka_batch=4)
        pixels = [0, 2]
        expected = sum(oracles.cms_oracle("rbf", 0.4, Xv[s:s + 4], Yv[s:s + 4], pixels) for s in (0, 4)) / 2
        assert cms(spec, IndexSet.of(pixels), X, Y, cfg) == pytest.approx(expected, rel=1e-12)
        expected_cka = sum(oracles.cka_oracle("rbf", 0.4, Xv[s:s + 4], [0], [1, 2]) for s in (0, 4, 8)) / 3
        assert cka(spec, spec, IndexSet.of([0]), IndexSet.of([1, 2]), X, cfg) == pytest.approx(
            expected_cka, rel=1e-12, abs=1e-12)


class TestDependence:
    def test_hsic_symmetric(self, small_pair, rbf):
        X, _ = small_pair
        a, b = IndexSet.of([0]), IndexSet.of([1, 2])
        cfg = EstimatorConfig(cka_batch=20)
        assert hsic(rbf, rbf, a, b, X, cfg) == hsic(rbf, rbf, b, a, X, cfg)

    def test_self_cka_is_one(self, small_pair, rbf):
        X, _ = small_pair
        a = IndexSet.of([1, 3])
        assert cka(rbf, rbf, a, a, X, EstimatorConfig(cka_batch=20)) == 1.0

    def test_cka_range(self):
        rng = np.random.default_rng(5)
        spec = KernelSpec("rbf", 0.5)
        for _ in range(20):
            X = SampleMatrix.from_array(rng.normal(size=(30, 3)), 1, 3)
            value = cka(spec, spec, IndexSet.of([0]), IndexSet.of([1, 2]), X, EstimatorConfig(cka_batch=10))
            assert 0.0 <= value <= 1.0 + 1e-9

    def test_hsic_of_two_samples(self, rbf):
        values = np.array([[0.3, -1.0], [1.1, 0.4]])
        X = SampleMatrix.from_array(values, 1, 2)
        k_a = math.exp(-0.5 * (0.3 - 1.1) ** 2)
        k_b = math.exp(-0.5 * (-1.0 - 0.4) ** 2)
        expected = (2.0 - 2.0 * k_a) * (2.0 - 2.0 * k_b) / 4
        assert hsic(rbf, rbf, IndexSet.of([0]), IndexSet.of([1]), X, FULL_DATA) == pytest.approx(expected, rel=1e-12)

    def test_cka_of_two_sample_blocks_is_one(self, rng, rbf):
        X = SampleMatrix.from_array(rng.normal(size=(10, 3)), 1, 3)
        value = cka(rbf, rbf, IndexSet.of([0]), IndexSet.of([1, 2]), X, EstimatorConfig(cka_batch=2))
        assert value == pytest.approx(1.0, abs=1e-12)

    def test_hsic_with_constant_pixel_is_zero(self, rng, rbf):
        values = rng.normal(size=(20, 2))
        values[:, 0] = -2.0
        X = SampleMatrix.from_array(values, 1, 2)
        assert hsic(rbf, rbf, IndexSet.of([0]), IndexSet.of([1]), X, FULL_DATA) == 0.0

    def test_cka_invariant_under_rescaling(self, small_pair):
        X, _ = small_pair
        scaled = SampleMatrix.from_array(X.data * 3.0, 2, 2)
        a, b = IndexSet.of([0, 1]), IndexSet.of([2])
        cfg = EstimatorConfig(cka_batch=20)
        original = cka(KernelSpec("rbf", 0.5), KernelSpec("rbf", 0.5), a, b, X, cfg)
        adjusted = KernelSpec("rbf", 0.5 / 9.0)
        assert cka(adjusted, adjusted, a, b, scaled, cfg) == pytest.approx(original, rel=1e-10)

    def test_constant_pixel_is_degenerate(self, rbf):
        values = np.random.default_rng(0).normal(size=(20, 2))
        values[:, 1] = 3.0
        X = SampleMatrix.from_array(values, 1, 2)
        with pytest.raises(DegeneratePixelError) as info:
            cka(rbf, rbf, IndexSet.of([0]), IndexSet.of([1]), X, EstimatorConfig(cka_batch=10))
        assert info.value.subset == IndexSet.of([1])
        assert info.value.block == 0

    def test_overlapping_subsets_rejected(self, small_pair, rbf):
        X, _ = small_pair
        with pytest.raises(InputFormatError):
            hsic(rbf, rbf, IndexSet.of([0, 1]), IndexSet.of([1, 2]), X, EstimatorConfig(cka_batch=20))

    def test_single_sample_rejected(self, rbf):
        X = SampleMatrix.from_array(np.zeros((1, 2)), 1, 2)
        with pytest.raises(DegenerateDataError):
            hsic(rbf, rbf, IndexSet.of([0]), IndexSet.of([1]), X, FULL_DATA)
