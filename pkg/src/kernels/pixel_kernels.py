"""
Pixel-wise kernels, their products over pixel index subsets, and Gram matrices.

Product kernels are evaluated in summed-exponent form,
``exp(-gamma * sum_i dist(x_i, y_i))``, so that long products over thousands
of pixels never underflow.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.spatial.distance import cdist

from ..errors import InputFormatError, ShapeMismatchError
from ..tensor_io.formats import SampleMatrix
from config.settings import PERFORMANCE_CONFIG

logger = logging.getLogger(__name__)


class KernelFamily(Enum):
    """Supported pixel-wise kernel families."""
    RBF = "rbf"
    LAPLACIAN = "laplacian"

    @property
    def metric(self) -> str:
        """scipy distance whose value enters the exponent."""
        return "sqeuclidean" if self is KernelFamily.RBF else "cityblock"


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family and bandwidth: rbf exp(-g*||a-b||^2), laplacian exp(-g*||a-b||_1)."""
    family: KernelFamily
    gamma: float

    def __post_init__(self):
        if not isinstance(self.family, KernelFamily):
            try:
                object.__setattr__(self, "family", KernelFamily(str(self.family).lower()))
            except ValueError as e:
                raise InputFormatError(f"unknown kernel family '{self.family}'") from e
        gamma = float(self.gamma)
        if not np.isfinite(gamma) or gamma <= 0:
            raise InputFormatError(f"gamma must be positive and finite, got {self.gamma}")
        object.__setattr__(self, "gamma", gamma)

    def with_gamma(self, gamma: float) -> "KernelSpec":
        return KernelSpec(self.family, gamma)

    def distance(self, diff: np.ndarray) -> float:
        """Exponent distance of a difference vector, summed in array order."""
        if self.family is KernelFamily.RBF:
            return float(np.sum(diff * diff))
        return float(np.sum(np.abs(diff)))

    def from_distance(self, dist: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        return np.exp(-self.gamma * dist)


@dataclass(frozen=True)
class IndexSet:
    """Sorted, distinct pixel indices."""
    indices: Tuple[int, ...]

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if not idx:
            raise InputFormatError("index set must be nonempty")
        if idx[0] < 0 or any(b <= a for a, b in zip(idx, idx[1:])):
            raise InputFormatError(f"index set must be strictly increasing and nonnegative: {idx[:10]}")
        object.__setattr__(self, "indices", idx)

    @classmethod
    def full(cls, d: int) -> "IndexSet":
        return cls(tuple(range(d)))

    @classmethod
    def of(cls, indices: Iterable[int]) -> "IndexSet":
        return cls(tuple(sorted(int(i) for i in indices)))

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    @property
    def min(self) -> int:
        return self.indices[0]

    def check(self, d: int) -> None:
        if self.indices[-1] >= d:
            raise ShapeMismatchError(f"subset index {self.indices[-1]} out of range for d={d}")

    def as_array(self) -> np.ndarray:
        return np.asarray(self.indices, dtype=np.intp)

    def isdisjoint(self, other: "IndexSet") -> bool:
        return set(self.indices).isdisjoint(other.indices)


@dataclass(frozen=True, eq=False)
class GramMatrix:
    """Kernel values between two sample sets."""
    values: np.ndarray

    @property
    def shape(self) -> Tuple[int, int]:
        return self.values.shape


def pixel_kernel(spec: KernelSpec, a: Sequence[float], b: Sequence[float]) -> float:
    """Kernel between two per-pixel channel vectors."""
    a = np.atleast_1d(np.asarray(a, dtype=np.float64))
    b = np.atleast_1d(np.asarray(b, dtype=np.float64))
    if a.shape != b.shape:
        raise ShapeMismatchError(f"channel vectors differ in length: {a.shape} vs {b.shape}")
    return float(spec.from_distance(spec.distance(a - b)))


def _as_pixels(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return x[:, None] if x.ndim == 1 else x


def product_log_kernel(spec: KernelSpec, subset: IndexSet, x: np.ndarray, y: np.ndarray) -> float:
    """log of the product kernel, i.e. -gamma times the summed pixel distances."""
    x, y = _as_pixels(x), _as_pixels(y)
    if x.shape != y.shape:
        raise ShapeMismatchError(f"samples differ in shape: {x.shape} vs {y.shape}")
    subset.check(x.shape[0])
    idx = subset.as_array()
    return -spec.gamma * spec.distance(x[idx] - y[idx])


def product_kernel(spec: KernelSpec, subset: IndexSet, x: np.ndarray, y: np.ndarray) -> float:
    """Product of pixel kernels over ``subset`` for two samples of shape (d, channels) or (d,)."""
    return float(np.exp(product_log_kernel(spec, subset, x, y)))


def kernel_matrix(spec: KernelSpec, features_a: np.ndarray, features_b: Optional[np.ndarray] = None,
                  workers: int = 1, tile_rows: Optional[int] = None) -> np.ndarray:
    """Kernel values between rows of two feature arrays.

    Rows are processed in tiles of fixed size; each entry is produced by one
    cdist call regardless of the worker count.
    """
    fb = features_a if features_b is None else features_b
    tile_rows = tile_rows or PERFORMANCE_CONFIG["gram_tile_rows"]
    n = features_a.shape[0]
    if workers <= 1 or n <= tile_rows:
        return spec.from_distance(cdist(features_a, fb, spec.family.metric))

    starts = list(range(0, n, tile_rows))

    def _tile(start: int) -> np.ndarray:
        return cdist(features_a[start:start + tile_rows], fb, spec.family.metric)

    with ThreadPoolExecutor(max_workers=workers) as executor:
        tiles = list(executor.map(_tile, starts))
    return spec.from_distance(np.vstack(tiles))


def gram(spec: KernelSpec, subset: IndexSet, A: SampleMatrix, B: SampleMatrix,
         workers: int = 1) -> GramMatrix:
    """Gram matrix of the product kernel over ``subset`` between samples of A and B."""
    if not A.meta.same_grid(B.meta):
        raise ShapeMismatchError(
            f"shape mismatch: {A.meta.height}x{A.meta.width}x{A.channels} vs "
            f"{B.meta.height}x{B.meta.width}x{B.channels}"
        )
    subset.check(A.d)
    fa = A.features(subset.indices)
    fb = fa if B is A else B.features(subset.indices)
    return GramMatrix(kernel_matrix(spec, fa, fb, workers=workers))
