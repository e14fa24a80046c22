"""
Data model for sample matrices and generator snapshot series.

Pixels are flattened row-major over the h x w grid with channels innermost;
every index set in the package refers to this pixel order.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Tuple, Iterator, Optional, Sequence

import numpy as np

from ..errors import InputFormatError


class FileFormat(Enum):
    """On-disk formats for sample matrices."""
    RAW_F32 = "raw_f32"
    CSV = "csv"

    @classmethod
    def from_path(cls, path: str) -> "FileFormat":
        return cls.CSV if str(path).lower().endswith(".csv") else cls.RAW_F32


@dataclass(frozen=True)
class DatasetMeta:
    """Shape and value range of a dataset of images."""
    n_samples: int
    height: int
    width: int
    channels: int
    value_range: Tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        for name in ("n_samples", "height", "width"):
            if int(getattr(self, name)) < 1:
                raise InputFormatError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.channels not in (1, 3):
            raise InputFormatError(f"channels must be 1 or 3, got {self.channels}")
        lo, hi = self.value_range
        if not (np.isfinite(lo) and np.isfinite(hi)) or lo > hi:
            raise InputFormatError(f"invalid value_range {self.value_range}")

    @property
    def d(self) -> int:
        """Number of pixels."""
        return self.height * self.width

    @property
    def shape_key(self) -> Tuple[int, int, int, int]:
        return (self.n_samples, self.height, self.width, self.channels)

    def same_grid(self, other: "DatasetMeta") -> bool:
        """True when both datasets share height, width and channels (n may differ)."""
        return (self.height, self.width, self.channels) == (other.height, other.width, other.channels)

    def to_sidecar(self) -> dict:
        return {"n": self.n_samples, "height": self.height, "width": self.width, "channels": self.channels}


@dataclass(frozen=True, eq=False)
class SampleMatrix:
    """n samples x d pixels x channels, stored as a read-only float64 array."""
    meta: DatasetMeta
    data: np.ndarray

    def __post_init__(self):
        m = self.meta
        expected = (m.n_samples, m.d, m.channels)
        if self.data.shape != expected:
            raise InputFormatError(
                f"dimension mismatch: data has shape {self.data.shape}, meta expects {expected}"
            )
        bad = ~np.isfinite(self.data)
        if bad.any():
            sample, pixel, channel = (int(v) for v in np.argwhere(bad)[0])
            raise InputFormatError(
                f"non-finite value at sample {sample}, pixel {pixel}, channel {channel}"
            )
        self.data.setflags(write=False)

    @classmethod
    def from_array(cls, values: np.ndarray, height: int, width: int, channels: int = 1) -> "SampleMatrix":
        """Build from any array holding n * height * width * channels values per the layout."""
        arr = np.array(values, dtype=np.float64, copy=True)
        d = height * width
        if arr.ndim == 0 or arr.size % (d * channels) != 0 or arr.size == 0:
            raise InputFormatError(
                f"dimension mismatch: {arr.size} values do not fill samples of {height}x{width}x{channels}"
            )
        n = arr.size // (d * channels)
        arr = arr.reshape(n, d, channels)
        finite = arr[np.isfinite(arr)]
        value_range = (float(finite.min()), float(finite.max())) if finite.size else (0.0, 0.0)
        meta = DatasetMeta(n, height, width, channels, value_range)
        return cls(meta, arr)

    @property
    def n(self) -> int:
        return self.meta.n_samples

    @property
    def d(self) -> int:
        return self.meta.d

    @property
    def channels(self) -> int:
        return self.meta.channels

    def features(self, indices: Optional[Sequence[int]] = None) -> np.ndarray:
        """Rows restricted to the given pixels, flattened to (n, |I| * channels)."""
        if indices is None:
            return self.data.reshape(self.n, -1)
        return self.data[:, np.asarray(indices, dtype=np.intp), :].reshape(self.n, -1)

    def take(self, start: int, stop: int) -> "SampleMatrix":
        """Samples start..stop-1 as a new matrix."""
        return SampleMatrix.from_array(self.data[start:stop], self.meta.height, self.meta.width, self.channels)

    def head(self, count: Optional[int]) -> "SampleMatrix":
        if count is None or count >= self.n:
            return self
        if count < 1:
            raise InputFormatError(f"cannot keep {count} samples")
        return self.take(0, count)


@dataclass(frozen=True)
class Snapshot:
    """Generated samples of one training iteration."""
    label: str
    ordinal: int
    samples: SampleMatrix


@dataclass
class SnapshotSeries:
    """Snapshots ordered by strictly increasing ordinal, all with one shape."""
    snapshots: List[Snapshot] = field(default_factory=list)

    def __post_init__(self):
        ordinals = [s.ordinal for s in self.snapshots]
        if any(b <= a for a, b in zip(ordinals, ordinals[1:])):
            raise InputFormatError(f"snapshot ordinals must be strictly increasing, got {ordinals}")
        if self.snapshots:
            reference = self.snapshots[0].samples.meta.shape_key
            for snap in self.snapshots[1:]:
                if snap.samples.meta.shape_key != reference:
                    raise InputFormatError(
                        f"inconsistent metas: {snap.label} has {snap.samples.meta.shape_key}, "
                        f"expected {reference}"
                    )

    def __iter__(self) -> Iterator[Snapshot]:
        return iter(self.snapshots)

    def __len__(self) -> int:
        return len(self.snapshots)

    @property
    def meta(self) -> DatasetMeta:
        return self.snapshots[0].samples.meta
