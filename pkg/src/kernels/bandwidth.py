"""
Median bandwidth heuristic: gamma = 1 / median of pairwise Euclidean distances.

Distances are plain (not squared) Euclidean norms. Zero distances are left out
of the median. Above ``max_pairs`` sample pairs, a seeded uniform subsample of
pairs is used.
"""

import logging
from typing import Optional

import numpy as np
from scipy.spatial.distance import pdist

from .pixel_kernels import IndexSet
from ..errors import DegenerateDataError
from ..tensor_io.formats import SampleMatrix
from config.settings import KERNEL_SETTINGS

logger = logging.getLogger(__name__)

_PAIR_CHUNK = 4096


def pairs_from_linear(k: np.ndarray, n: int):
    """Map linear indices over the row-major upper triangle (i < j) to (i, j)."""
    rows = np.arange(n - 1, dtype=np.int64)
    row_start = rows * n - rows * (rows + 1) // 2
    i = np.searchsorted(row_start, k, side="right") - 1
    j = k - row_start[i] + i + 1
    return i, j


def median_heuristic_gamma(A: SampleMatrix, subset: Optional[IndexSet] = None,
                           max_pairs: Optional[int] = None, seed: Optional[int] = None) -> float:
    """Inverse median pairwise distance of A's samples restricted to ``subset``."""
    max_pairs = KERNEL_SETTINGS["median_max_pairs"] if max_pairs is None else int(max_pairs)
    seed = KERNEL_SETTINGS["median_seed"] if seed is None else seed
    if A.n < 2:
        raise DegenerateDataError(f"median heuristic needs at least 2 samples, got {A.n}")
    if subset is not None:
        subset.check(A.d)
    features = A.features(None if subset is None else subset.indices)

    n = A.n
    n_pairs = n * (n - 1) // 2
    if n_pairs <= max_pairs:
        distances = pdist(features, "euclidean")
    else:
        rng = np.random.default_rng(seed)
        chosen = np.sort(rng.choice(n_pairs, size=max_pairs, replace=False))
        i, j = pairs_from_linear(chosen, n)
        distances = np.empty(max_pairs, dtype=np.float64)
        for start in range(0, max_pairs, _PAIR_CHUNK):
            stop = start + _PAIR_CHUNK
            diff = features[i[start:stop]] - features[j[start:stop]]
            distances[start:stop] = np.sqrt(np.einsum("ij,ij->i", diff, diff))
        logger.debug(f"Median heuristic subsampled {max_pairs} of {n_pairs} pairs (seed {seed})")

    nonzero = distances[distances > 0]
    if nonzero.size == 0:
        raise DegenerateDataError("degenerate bandwidth: all pairwise distances are zero")
    median = float(np.median(nonzero))
    gamma = 1.0 / median
    logger.info(f"Median heuristic: median distance {median:.6g} over {nonzero.size} pairs -> gamma {gamma:.6g}")
    return gamma
