"""
Plugin V-statistic estimators of mean-embedding inner products, CMS and MMD^2.

    xx = 1/n^2 sum_ij k(X_i, X_j)     yy = 1/m^2 sum_ij k(Y_i, Y_j)
    xy = 1/(nm) sum_ij k(X_i, Y_j)
    CMS = xy / sqrt(xx * yy)          MMD^2 = xx + yy - 2 xy

Diagonal terms are included. Block estimators average the per-block values.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .blocks import EstimatorConfig, paired_block_slices, block_mean
from ..errors import DegenerateDataError, ShapeMismatchError
from ..kernels.pixel_kernels import KernelSpec, IndexSet, kernel_matrix
from ..tensor_io.formats import SampleMatrix

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MeanEmbeddingStats:
    """Estimates of ||mu_P||^2, ||mu_Q||^2 and <mu_P, mu_Q>."""
    xx: float
    yy: float
    xy: float

    @property
    def cms(self) -> float:
        return self.xy / math.sqrt(self.xx * self.yy)

    @property
    def mmd2(self) -> float:
        return self.xx + self.yy - 2.0 * self.xy


def stats_from_features(spec: KernelSpec, fx: np.ndarray, fy: np.ndarray,
                        workers: int = 1) -> MeanEmbeddingStats:
    """Mean-embedding statistics of two feature arrays (rows are samples)."""
    if fx.shape[0] == 0 or fy.shape[0] == 0:
        raise DegenerateDataError("empty dataset")
    xx = float(np.mean(kernel_matrix(spec, fx, workers=workers)))
    yy = float(np.mean(kernel_matrix(spec, fy, workers=workers)))
    xy = float(np.mean(kernel_matrix(spec, fx, fy, workers=workers)))
    return MeanEmbeddingStats(xx, yy, xy)


def _check_pair(subset: IndexSet, X: SampleMatrix, Y: SampleMatrix) -> None:
    if not X.meta.same_grid(Y.meta):
        raise ShapeMismatchError(
            f"shape mismatch: {X.meta.height}x{X.meta.width}x{X.channels} vs "
            f"{Y.meta.height}x{Y.meta.width}x{Y.channels}"
        )
    subset.check(X.d)


def mean_embedding_stats(spec: KernelSpec, subset: IndexSet, X: SampleMatrix, Y: SampleMatrix,
                         workers: int = 1) -> MeanEmbeddingStats:
    """Full-data (single block) mean-embedding statistics over ``subset``."""
    _check_pair(subset, X, Y)
    return stats_from_features(spec, X.features(subset.indices), Y.features(subset.indices), workers)


def block_statistics(spec: KernelSpec, subset: IndexSet, X: SampleMatrix, Y: SampleMatrix,
                     cfg: Optional[EstimatorConfig] = None, workers: int = 1) -> List[MeanEmbeddingStats]:
    """Per-block statistics for aligned blocks of X and Y."""
    cfg = cfg or EstimatorConfig.from_settings()
    _check_pair(subset, X, Y)
    fx = X.features(subset.indices)
    fy = Y.features(subset.indices)
    stats = [stats_from_features(spec, fx[bx], fy[by], workers)
             for bx, by in paired_block_slices(X.n, Y.n, cfg)]
    logger.debug(f"Computed {len(stats)} block statistics over {len(subset)} pixels")
    return stats


def cms(spec: KernelSpec, subset: IndexSet, X: SampleMatrix, Y: SampleMatrix,
        cfg: Optional[EstimatorConfig] = None, workers: int = 1) -> float:
    """Block-averaged cosine similarity of the empirical mean embeddings."""
    return block_mean([s.cms for s in block_statistics(spec, subset, X, Y, cfg, workers)])


def mmd2(spec: KernelSpec, subset: IndexSet, X: SampleMatrix, Y: SampleMatrix,
         cfg: Optional[EstimatorConfig] = None, workers: int = 1) -> float:
    """Block-averaged squared MMD; tiny negative values from cancellation are returned as is."""
    return block_mean([s.mmd2 for s in block_statistics(spec, subset, X, Y, cfg, workers)])
