"""
Plugin estimators for CMS, MMD^2, HSIC and CKA with mini-batch block averaging.
"""

from .blocks import EstimatorConfig, block_slices, paired_block_slices, single_blocks, block_mean
from .embedding import (
    MeanEmbeddingStats,
    mean_embedding_stats,
    block_statistics,
    stats_from_features,
    cms,
    mmd2,
)
from .dependence import center, hsic, cka

__all__ = [
    "EstimatorConfig",
    "block_slices",
    "paired_block_slices",
    "single_blocks",
    "block_mean",
    "MeanEmbeddingStats",
    "mean_embedding_stats",
    "block_statistics",
    "stats_from_features",
    "cms",
    "mmd2",
    "center",
    "hsic",
    "cka",
]
