"""
Tests for partitions, the pairwise-pixel CKA matrix and agglomerative clustering.
"""

import numpy as np
import pytest
from scipy.cluster.hierarchy import fcluster, linkage as scipy_linkage
from scipy.spatial.distance import squareform

from config import settings
from src.clustering import (
    CkaMatrix,
    Linkage,
    Partition,
    agglomerate,
    cka_matrix,
    cka_matrix_to_csv,
    cluster,
    linkage_heights,
    load_cka_matrix,
    load_partition,
    reorder_by_partition,
    save_cka_matrix,
    save_partition,
)
from src.errors import InputFormatError, ShapeMismatchError
from src.estimators import EstimatorConfig, cka
from src.kernels import IndexSet, KernelSpec, median_heuristic_gamma
from src.monitor import BlockSource, block_partition, synth_independent
from src.tensor_io import SampleMatrix
from tests import oracles


def _as_sets(partition):
    return {frozenset(c.indices) for c in partition}


def _random_similarity(rng, d):
    A = rng.uniform(0.0, 1.0, size=(d, d))
    M = (A + A.T) / 2
    np.fill_diagonal(M, 1.0)
    return CkaMatrix(d=d, values=M)


def _block_diagonal(blocks, d, within=0.9, across=0.1):
    M = np.full((d, d), across)
    for block in blocks:
        M[np.ix_(block, block)] = within
    np.fill_diagonal(M, 1.0)
    return CkaMatrix(d=d, values=M)


class TestPartition:
    def test_clusters_sorted_by_minimum(self):
        p = Partition.from_lists([[3, 4], [0, 2], [1]], 5)
        assert [c.indices for c in p] == [(0, 2), (1,), (3, 4)]
        np.testing.assert_array_equal(p.labels(), [0, 1, 0, 2, 2])
        np.testing.assert_array_equal(p.order(), [0, 2, 1, 3, 4])

    def test_overlap_rejected(self):
        with pytest.raises(InputFormatError, match="overlapping"):
            Partition.from_lists([[0, 1], [1, 2]], 3)

    def test_incomplete_rejected(self):
        with pytest.raises(InputFormatError, match="incomplete"):
            Partition.from_lists([[0], [2]], 3)

    def test_out_of_range_rejected(self):
        with pytest.raises(InputFormatError):
            Partition.from_lists([[0, 1, 5]], 3)

    def test_from_labels(self):
        p = Partition.from_labels([1, 0, 1, 2])
        assert p.as_lists() == [[0, 2], [1], [3]]

    def test_json_round_trip(self, tmp_path):
        p = Partition.from_lists([[0, 3], [1, 2], [4]], 5)
        path = str(tmp_path / "p.json")
        save_partition(p, path)
        loaded = load_partition(path)
        assert loaded == p
        assert len(loaded) == 3

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "p.json"
        path.write_text('{"d": 3, "clusters": [[0, 1]]}')
        with pytest.raises(InputFormatError, match="incomplete"):
            load_partition(str(path))
        path.write_text("{not json")
        with pytest.raises(InputFormatError, match="malformed partition"):
            load_partition(str(path))


class TestLinkage:
    def test_all_ties_merge_lowest_indices_first(self):
        M = np.full((4, 4), 0.5)
        np.fill_diagonal(M, 1.0)
        members, merges = agglomerate(CkaMatrix(4, M), 2)
        assert [(m.lo, m.hi) for m in merges] == [(0, 1), (0, 2)]
        assert _as_sets(cluster(CkaMatrix(4, M), 2)) == {frozenset({0, 1, 2}), frozenset({3})}

    def test_k_equal_d_gives_singletons(self, rng):
        M = _random_similarity(rng, 5)
        assert cluster(M, 5) == Partition.singletons(5)

    def test_k_one_gives_single_cluster(self, rng):
        assert len(cluster(_random_similarity(rng, 6), 1)) == 1

    def test_k_out_of_range(self, rng):
        with pytest.raises(InputFormatError):
            cluster(_random_similarity(rng, 4), 0)
        with pytest.raises(InputFormatError):
            cluster(_random_similarity(rng, 4), 5)

    def test_unknown_linkage(self, rng):
        with pytest.raises(InputFormatError, match="unknown linkage"):
            cluster(_random_similarity(rng, 4), 2, "ward")

    @pytest.mark.parametrize("method", ["average", "complete", "single"])
    def test_agrees_with_scipy(self, method):
        rng = np.random.default_rng(11)
        for _ in range(10):
            M = _random_similarity(rng, 12)
            D = 1.0 - M.values
            np.fill_diagonal(D, 0.0)
            labels = fcluster(scipy_linkage(squareform(D, checks=False), method=method), 4, criterion="maxclust")
            expected = Partition.from_labels(labels.tolist())
            assert _as_sets(cluster(M, 4, method)) == _as_sets(expected)

    def test_recovers_block_diagonal_matrix(self):
        blocks = [[0, 1, 2], [3, 4, 5], [6, 7]]
        M = _block_diagonal(blocks, 8)
        for method in ("average", "complete", "single"):
            assert cluster(M, 3, method) == Partition.from_lists(blocks, 8)

    def test_permutation_equivariant(self):
        blocks = [[0, 1, 2], [3, 4, 5], [6, 7]]
        M = _block_diagonal(blocks, 8)
        rng = np.random.default_rng(21)
        for _ in range(10):
            perm = rng.permutation(8)
            permuted = CkaMatrix(8, M.values[np.ix_(perm, perm)])
            position = {int(p): i for i, p in enumerate(perm)}
            expected = Partition.from_lists([[position[i] for i in block] for block in blocks], 8)
            assert cluster(permuted, 3) == expected

    @pytest.mark.parametrize("method", ["average", "complete", "single"])
    def test_merge_sequence_matches_full_scan(self, method):
        rng = np.random.default_rng(17)
        for _ in range(10):
            A = np.round(rng.uniform(0.0, 1.0, size=(15, 15)), 1)
            M = (A + A.T) / 2
            np.fill_diagonal(M, 1.0)
            _, merges = agglomerate(CkaMatrix(15, M), 2, Linkage(method))
            got = [(m.lo, m.hi, m.height, m.size) for m in merges]
            assert got == oracles.merge_sequence_oracle(M.tolist(), 2, method)

    def test_heights_sequence(self, rng):
        M = _random_similarity(rng, 8)
        merges = linkage_heights(M, Linkage.AVERAGE)
        assert len(merges) == 7
        assert merges[-1].size == 8
        heights = [m.height for m in merges]
        assert all(b >= a - 1e-12 for a, b in zip(heights, heights[1:]))


class TestCkaMatrix:
    def test_small_matrix_matches_pairwise_cka(self, rng):
        train = SampleMatrix.from_array(rng.normal(size=(60, 4)), 2, 2)
        spec = KernelSpec("rbf", 0.5)
        cfg = EstimatorConfig(cka_batch=20)
        M = cka_matrix(spec, train, cfg, workers=1)
        for i in range(4):
            for j in range(i + 1, 4):
                expected = cka(spec, spec, IndexSet.of([i]), IndexSet.of([j]), train, cfg)
                assert M.values[i, j] == pytest.approx(max(expected, 0.0), abs=1e-12)
        assert np.all(np.diag(M.values) == 1.0)
        np.testing.assert_array_equal(M.values, M.values.T)

    def test_worker_count_does_not_change_result(self, rng):
        settings.PERFORMANCE_CONFIG["cka_tile_pixels"] = 4
        train = SampleMatrix.from_array(rng.normal(size=(40, 9)), 3, 3)
        spec = KernelSpec("laplacian", 0.3)
        cfg = EstimatorConfig(cka_batch=20)
        np.testing.assert_array_equal(cka_matrix(spec, train, cfg, workers=1).values,
                                      cka_matrix(spec, train, cfg, workers=4).values)

    def test_degenerate_pixel_zeroed(self, rng):
        values = rng.normal(size=(30, 3))
        values[:, 1] = 0.25
        M = cka_matrix(KernelSpec("rbf", 0.5), SampleMatrix.from_array(values, 1, 3), EstimatorConfig(cka_batch=10))
        assert M.degenerate == (1,)
        assert np.all(M.values[1] == 0.0) and np.all(M.values[:, 1] == 0.0)
        assert M.values[0, 0] == 1.0

    def test_n_train_cap(self, rng):
        train = SampleMatrix.from_array(rng.normal(size=(50, 2)), 1, 2)
        spec = KernelSpec("rbf", 0.5)
        cfg = EstimatorConfig(cka_batch=10)
        capped = cka_matrix(spec, train, cfg, n_train=20)
        np.testing.assert_array_equal(capped.values, cka_matrix(spec, train.head(20), cfg).values)

    def test_asymmetric_rejected(self):
        with pytest.raises(InputFormatError):
            CkaMatrix(2, np.array([[1.0, 0.2], [0.3, 1.0]]))

    def test_save_load(self, tmp_path, rng):
        values = rng.normal(size=(30, 3))
        values[:, 2] = 1.0
        M = cka_matrix(KernelSpec("rbf", 0.5), SampleMatrix.from_array(values, 1, 3), EstimatorConfig(cka_batch=10))
        path = str(tmp_path / "m.f32")
        save_cka_matrix(M, path)
        loaded = load_cka_matrix(path)
        np.testing.assert_array_equal(loaded.values, M.values.astype(np.float32).astype(np.float64))
        assert loaded.degenerate == (2,)

    def test_load_size_mismatch(self, tmp_path):
        path = tmp_path / "m.f32"
        np.eye(3, dtype="<f4").tofile(str(path))
        (tmp_path / "m.f32.meta.json").write_text('{"d": 2}')
        with pytest.raises(InputFormatError, match="dimension mismatch"):
            load_cka_matrix(str(path))

    def test_reorder_and_csv(self, tmp_path, rng):
        M = _random_similarity(rng, 4)
        p = Partition.from_lists([[0, 2], [1, 3]], 4)
        values, order = reorder_by_partition(M, p)
        np.testing.assert_array_equal(order, [0, 2, 1, 3])
        assert values[0, 1] == M.values[0, 2]
        path = tmp_path / "m.csv"
        cka_matrix_to_csv(M, str(path), order)
        assert path.read_text().splitlines()[0] == ",0,2,1,3"
        with pytest.raises(ShapeMismatchError):
            reorder_by_partition(M, Partition.singletons(3))


class TestSyntheticSeparation:
    def _blocks(self):
        return [BlockSource(2, coupling=0.8), BlockSource(2, coupling=0.8)]

    def test_off_block_small_and_duplicates_high(self):
        blocks = [BlockSource(2, coupling=1.0), BlockSource(2, coupling=0.8)]
        train = synth_independent(blocks, 2000, seed=7)
        spec = KernelSpec("rbf", median_heuristic_gamma(train))
        M = cka_matrix(spec, train, EstimatorConfig(cka_batch=100)).values
        assert M[0, 1] > 0.99
        for i in (0, 1):
            for j in (2, 3):
                assert M[i, j] < 0.15

    @pytest.mark.slow
    def test_clustering_recovers_blocks(self):
        blocks = [BlockSource(2, coupling=0.8), BlockSource(3, coupling=0.7), BlockSource(2, coupling=0.9)]
        truth = _as_sets(block_partition(blocks))
        recovered = 0
        for seed in range(20):
            train = synth_independent(blocks, 2000, seed=seed)
            spec = KernelSpec("rbf", median_heuristic_gamma(train))
            M = cka_matrix(spec, train, EstimatorConfig(cka_batch=100))
            recovered += _as_sets(cluster(M, 3)) == truth
        assert recovered >= 19
