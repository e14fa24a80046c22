"""
Agglomerative hierarchical clustering of pixels on the dissimilarity 1 - CKA.

Clusters are represented by their smallest pixel index. The dissimilarity
matrix is kept symmetric with +inf on the diagonal and on retired rows, so the
first row-major minimum is the tied candidate whose clusters have the lowest
minimum pixel indices (lexicographically).
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..errors import InputFormatError
from .cka_matrix import CkaMatrix
from .partition import Partition
from config.settings import CLUSTERING_SETTINGS

logger = logging.getLogger(__name__)


class Linkage(Enum):
    AVERAGE = "average"
    COMPLETE = "complete"
    SINGLE = "single"


@dataclass(frozen=True)
class MergeStep:
    """One merge: representatives lo < hi joined at ``height`` into ``size`` pixels."""
    lo: int
    hi: int
    height: float
    size: int


def _combine(linkage: Linkage, row_lo: np.ndarray, row_hi: np.ndarray, n_lo: float, n_hi: float) -> np.ndarray:
    if linkage is Linkage.AVERAGE:
        return (n_lo * row_lo + n_hi * row_hi) / (n_lo + n_hi)
    if linkage is Linkage.COMPLETE:
        return np.maximum(row_lo, row_hi)
    return np.minimum(row_lo, row_hi)


def agglomerate(M: CkaMatrix, num_clusters: int,
                linkage: Linkage = Linkage.AVERAGE) -> Tuple[Dict[int, List[int]], List[MergeStep]]:
    """Merge clusters until ``num_clusters`` remain; returns members by representative and the merges.

    Each row caches its minimum and first argmin. The first row holding the
    smallest cached minimum gives the row-major first minimum of the whole
    matrix, so a merge costs O(d) plus the rows whose cached argmin was touched.
    """
    d = M.d
    D = 1.0 - M.values
    np.fill_diagonal(D, np.inf)
    sizes = np.ones(d, dtype=np.float64)
    members: Dict[int, List[int]] = {i: [i] for i in range(d)}
    merges: List[MergeStep] = []
    row_min = D.min(axis=1)
    row_arg = D.argmin(axis=1)

    for _ in range(d - num_clusters):
        lo = int(np.argmin(row_min))
        hi = int(row_arg[lo])
        if lo > hi:
            lo, hi = hi, lo
        height = float(D[lo, hi])
        row = _combine(linkage, D[lo], D[hi], sizes[lo], sizes[hi])
        D[lo, :] = row
        D[:, lo] = row
        D[lo, lo] = np.inf
        D[hi, :] = np.inf
        D[:, hi] = np.inf
        sizes[lo] += sizes[hi]
        members[lo].extend(members.pop(hi))
        merges.append(MergeStep(lo=lo, hi=hi, height=height, size=int(sizes[lo])))

        stale = (row_arg == lo) | (row_arg == hi)
        column = D[:, lo]
        better = np.isfinite(column) & ((column < row_min) | ((column == row_min) & (lo < row_arg)))
        row_min = np.where(better, column, row_min)
        row_arg = np.where(better, lo, row_arg)
        stale[lo] = True
        stale[hi] = False
        rows = np.flatnonzero(stale)
        if rows.size:
            row_min[rows] = D[rows].min(axis=1)
            row_arg[rows] = D[rows].argmin(axis=1)
        row_min[hi] = np.inf

    return members, merges


def _parse_linkage(linkage) -> Linkage:
    if isinstance(linkage, Linkage):
        return linkage
    try:
        return Linkage(str(linkage).lower())
    except ValueError as e:
        raise InputFormatError(f"unknown linkage '{linkage}'") from e


def cluster(M: CkaMatrix, num_clusters: int, linkage: Optional[object] = None) -> Partition:
    """Partition the pixels of M into ``num_clusters`` clusters (average linkage by default)."""
    if not 1 <= num_clusters <= M.d:
        raise InputFormatError(f"num_clusters must lie in [1, {M.d}], got {num_clusters}")
    method = _parse_linkage(linkage or CLUSTERING_SETTINGS["linkage"])
    members, merges = agglomerate(M, num_clusters, method)
    if merges:
        logger.info(f"{method.value} linkage: {len(merges)} merges, last height {merges[-1].height:.4f}")
    return Partition.from_lists(members.values(), M.d)


def linkage_heights(M: CkaMatrix, linkage: Optional[object] = None) -> List[MergeStep]:
    """The full merge sequence down to one cluster, for choosing the number of clusters."""
    _, merges = agglomerate(M, 1, _parse_linkage(linkage or CLUSTERING_SETTINGS["linkage"]))
    return merges
