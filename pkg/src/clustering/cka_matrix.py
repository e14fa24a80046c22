"""
Pairwise-pixel CKA matrix on training data.

For each block, every pixel's doubly centered Gram matrix is flattened into a
row of G, so that all pairwise HSIC values of the block are the entries of
G G^T. Tiles of G are multiplied on a thread pool; tile sizes are fixed and do
not depend on the worker count.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Tuple, List

import numpy as np
import pandas as pd
from tqdm import tqdm

from ..errors import InputFormatError, ShapeMismatchError
from ..estimators.blocks import EstimatorConfig, single_blocks
from ..kernels.pixel_kernels import KernelSpec
from ..tensor_io.formats import SampleMatrix
from ..tensor_io.loader import read_sidecar, write_sidecar
from .partition import Partition
from config.settings import CLUSTERING_SETTINGS, PERFORMANCE_CONFIG

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class CkaMatrix:
    """Symmetric d x d matrix of pairwise-pixel CKA values."""
    d: int
    values: np.ndarray
    degenerate: Tuple[int, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.values.shape != (self.d, self.d):
            raise ShapeMismatchError(f"CKA matrix shape {self.values.shape} does not match d={self.d}")
        if not np.array_equal(self.values, self.values.T):
            raise InputFormatError("CKA matrix is not symmetric")


def _centered_pixel_grams(spec: KernelSpec, block: np.ndarray, tile: int) -> np.ndarray:
    """Rows are the flattened H K_i H of every pixel i; block has shape (m, d, channels)."""
    m, d, _ = block.shape
    rows = np.empty((d, m * m), dtype=np.float64)
    for start in range(0, d, tile):
        part = block[:, start:start + tile, :]
        diff = part[:, None, :, :] - part[None, :, :, :]
        if spec.family.metric == "sqeuclidean":
            dist = np.sum(diff * diff, axis=3)
        else:
            dist = np.sum(np.abs(diff), axis=3)
        K = np.exp(-spec.gamma * dist)
        K = K - K.mean(axis=0, keepdims=True) - K.mean(axis=1, keepdims=True) + K.mean(axis=(0, 1), keepdims=True)
        rows[start:start + part.shape[1]] = K.transpose(2, 0, 1).reshape(part.shape[1], m * m)
    return rows


def _block_hsic_matrix(G: np.ndarray, tile: int, workers: int) -> np.ndarray:
    """Upper-triangular tiles of G G^T; the lower triangle is left at zero."""
    d = G.shape[0]
    starts = list(range(0, d, tile))
    tasks = [(a, b) for i, a in enumerate(starts) for b in starts[i:]]
    out = np.zeros((d, d), dtype=np.float64)

    def _tile(task):
        a, b = task
        return G[a:a + tile] @ G[b:b + tile].T

    if workers > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            results = list(executor.map(_tile, tasks))
    else:
        results = [_tile(t) for t in tasks]
    for (a, b), value in zip(tasks, results):
        out[a:a + tile, b:b + tile] = value
    return np.triu(out)


def cka_matrix(spec: KernelSpec, train: SampleMatrix, cfg: Optional[EstimatorConfig] = None,
               workers: Optional[int] = None, n_train: Optional[int] = None,
               show_progress: Optional[bool] = None) -> CkaMatrix:
    """CKA between every pair of pixels, averaged over blocks of ``cfg.cka_batch`` samples.

    Pixels that are constant in some block are degenerate: their row, column and
    diagonal are 0 and they are listed in ``CkaMatrix.degenerate``.
    """
    cfg = cfg or EstimatorConfig.from_settings()
    workers = PERFORMANCE_CONFIG["workers"] if workers is None else workers
    n_train = CLUSTERING_SETTINGS["n_train"] if n_train is None else n_train
    show_progress = PERFORMANCE_CONFIG["show_progress"] if show_progress is None else show_progress
    tile = PERFORMANCE_CONFIG["cka_tile_pixels"]
    threshold = CLUSTERING_SETTINGS["degenerate_threshold"]

    train = train.head(n_train)
    d = train.d
    blocks = single_blocks(train.n, cfg)
    logger.info(f"Computing {d}x{d} CKA matrix on {train.n} samples in {len(blocks)} blocks "
                f"(gamma={spec.gamma:.6g}, workers={workers})")

    total = np.zeros((d, d), dtype=np.float64)
    degenerate = np.zeros(d, dtype=bool)
    for block in tqdm(blocks, desc="CKA blocks", disable=not show_progress):
        G = _centered_pixel_grams(spec, train.data[block], tile)
        hsic = _block_hsic_matrix(G, tile, workers)
        self_hsic = np.diag(hsic).copy()
        degenerate |= self_hsic <= threshold
        scale = np.sqrt(np.outer(self_hsic, self_hsic))
        with np.errstate(divide="ignore", invalid="ignore"):
            total += np.where(scale > 0, hsic / scale, 0.0)

    values = np.triu(total / len(blocks), k=1)
    values = np.clip(values + values.T, 0.0, None)
    np.fill_diagonal(values, 1.0)
    bad = np.flatnonzero(degenerate)
    if bad.size:
        values[bad, :] = 0.0
        values[:, bad] = 0.0
        logger.warning(f"{bad.size} degenerate (constant) pixels set to CKA 0: {bad[:20].tolist()}")
    return CkaMatrix(d=d, values=values, degenerate=tuple(int(i) for i in bad))


def save_cka_matrix(M: CkaMatrix, path: str) -> None:
    """Raw little-endian f32 d x d payload plus ``{"d": int}`` sidecar."""
    try:
        M.values.astype("<f4").tofile(path)
    except OSError as e:
        raise InputFormatError(f"cannot write {path}: {e}") from e
    write_sidecar(path, {"d": M.d})
    logger.info(f"Saved {M.d}x{M.d} CKA matrix to {path}")


def load_cka_matrix(path: str) -> CkaMatrix:
    try:
        d = read_sidecar(path, keys=("d",))["d"]
        if d < 1:
            raise InputFormatError(f"malformed sidecar of {path}: d={d}")
        values = np.fromfile(path, dtype="<f4")
    except FileNotFoundError as e:
        raise InputFormatError(f"file not found: {path}") from e
    if values.size != d * d:
        raise InputFormatError(f"dimension mismatch: {path} holds {values.size} floats, sidecar d={d}")
    values = values.astype(np.float64).reshape(d, d)
    if not np.isfinite(values).all():
        raise InputFormatError(f"non-finite CKA value in {path}")
    degenerate = tuple(int(i) for i in np.flatnonzero(np.diag(values) == 0.0))
    return CkaMatrix(d=d, values=values, degenerate=degenerate)


def reorder_by_partition(M: CkaMatrix, partition: Partition) -> Tuple[np.ndarray, np.ndarray]:
    """M with pixels permuted so that clusters form contiguous diagonal blocks."""
    if partition.d != M.d:
        raise ShapeMismatchError(f"partition d={partition.d} does not match matrix d={M.d}")
    order = partition.order()
    return M.values[np.ix_(order, order)], order


def cka_matrix_to_csv(M: CkaMatrix, path: str, order: Optional[List[int]] = None) -> None:
    """CSV export (one row per pixel); intended for small d."""
    values = M.values if order is None else M.values[np.ix_(order, order)]
    labels = list(range(M.d)) if order is None else [int(i) for i in order]
    try:
        pd.DataFrame(values, index=labels, columns=labels).to_csv(path)
    except OSError as e:
        raise InputFormatError(f"cannot write {path}: {e}") from e
