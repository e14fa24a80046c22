"""
HSIC and CKA between two pixel subsets of the same (paired) samples.

HSIC(A, B) = tr(K_A H K_B H) with H = I - 11^T/n, without the 1/(n-1)^2 factor.
It is evaluated as the Frobenius product of the two doubly centered Gram
matrices, which equals the trace form and is exactly symmetric in A and B.
"""

import logging
import math
from typing import List, Optional, Tuple

import numpy as np

from .blocks import EstimatorConfig, single_blocks, block_mean
from ..errors import DegeneratePixelError, InputFormatError
from ..kernels.pixel_kernels import KernelSpec, IndexSet, kernel_matrix
from ..tensor_io.formats import SampleMatrix
from config.settings import CLUSTERING_SETTINGS

logger = logging.getLogger(__name__)


def center(K: np.ndarray) -> np.ndarray:
    """H K H for a square kernel matrix."""
    return K - K.mean(axis=0, keepdims=True) - K.mean(axis=1, keepdims=True) + K.mean()


def _block_hsic_terms(specA: KernelSpec, specB: KernelSpec, subsetA: IndexSet, subsetB: IndexSet,
                      D: SampleMatrix, cfg: Optional[EstimatorConfig]) -> List[Tuple[float, float, float]]:
    """(HSIC(A,B), HSIC(A,A), HSIC(B,B)) per block."""
    cfg = cfg or EstimatorConfig.from_settings()
    subsetA.check(D.d)
    subsetB.check(D.d)
    if subsetA != subsetB and not subsetA.isdisjoint(subsetB):
        raise InputFormatError("HSIC subsets must be disjoint or identical")
    fa = D.features(subsetA.indices)
    fb = D.features(subsetB.indices)
    terms = []
    for block in single_blocks(D.n, cfg):
        ca = center(kernel_matrix(specA, fa[block]))
        cb = ca if (subsetA == subsetB and specA == specB) else center(kernel_matrix(specB, fb[block]))
        terms.append((float(np.sum(ca * cb)), float(np.sum(ca * ca)), float(np.sum(cb * cb))))
    return terms


def hsic(specA: KernelSpec, specB: KernelSpec, subsetA: IndexSet, subsetB: IndexSet,
         D: SampleMatrix, cfg: Optional[EstimatorConfig] = None) -> float:
    """Block-averaged HSIC between the pixels in subsetA and subsetB of the same samples."""
    return block_mean([t[0] for t in _block_hsic_terms(specA, specB, subsetA, subsetB, D, cfg)])


def cka(specA: KernelSpec, specB: KernelSpec, subsetA: IndexSet, subsetB: IndexSet,
        D: SampleMatrix, cfg: Optional[EstimatorConfig] = None,
        threshold: Optional[float] = None) -> float:
    """Block-averaged centered kernel alignment HSIC(A,B) / sqrt(HSIC(A,A) HSIC(B,B)).

    Raises DegeneratePixelError when a subset is constant within a block.
    """
    threshold = CLUSTERING_SETTINGS["degenerate_threshold"] if threshold is None else threshold
    ratios = []
    for block, (ab, aa, bb) in enumerate(_block_hsic_terms(specA, specB, subsetA, subsetB, D, cfg)):
        for subset, self_term in ((subsetA, aa), (subsetB, bb)):
            if self_term <= threshold:
                raise DegeneratePixelError(
                    f"degenerate pixel: subset starting at pixel {subset.min} is constant in block {block}",
                    subset=subset, block=block,
                )
        ratios.append(ab / math.sqrt(aa * bb))
    return block_mean(ratios)
