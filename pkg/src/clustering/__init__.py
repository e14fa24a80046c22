"""
Pairwise-pixel CKA matrix and hierarchical clustering of pixels.
"""

from .partition import Partition, save_partition, load_partition
from .cka_matrix import (
    CkaMatrix,
    cka_matrix,
    save_cka_matrix,
    load_cka_matrix,
    reorder_by_partition,
    cka_matrix_to_csv,
)
from .linkage import Linkage, MergeStep, agglomerate, cluster, linkage_heights

__all__ = [
    "Partition",
    "save_partition",
    "load_partition",
    "CkaMatrix",
    "cka_matrix",
    "save_cka_matrix",
    "load_cka_matrix",
    "reorder_by_partition",
    "cka_matrix_to_csv",
    "Linkage",
    "MergeStep",
    "agglomerate",
    "cluster",
    "linkage_heights",
]
