"""
Partitions of the pixel index set and their JSON persistence.

JSON schema: ``{"d": int, "clusters": [[int, ...], ...]}``.
"""

import json
import logging
from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from ..errors import InputFormatError
from ..kernels.pixel_kernels import IndexSet

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Partition:
    """Disjoint pixel clusters covering 0..d-1, ordered by smallest index."""
    clusters: Tuple[IndexSet, ...]
    d: int

    def __post_init__(self):
        clusters = tuple(sorted(self.clusters, key=lambda c: c.min))
        object.__setattr__(self, "clusters", clusters)
        if self.d < 1 or not clusters:
            raise InputFormatError(f"partition needs d >= 1 and at least one cluster (d={self.d})")
        seen = np.zeros(self.d, dtype=np.int64)
        for cluster in clusters:
            if cluster.indices[-1] >= self.d:
                raise InputFormatError(f"cluster index {cluster.indices[-1]} out of range for d={self.d}")
            seen[cluster.as_array()] += 1
        if (seen > 1).any():
            raise InputFormatError(f"overlapping clusters at pixels {np.flatnonzero(seen > 1)[:10].tolist()}")
        if (seen == 0).any():
            raise InputFormatError(f"incomplete partition: pixels {np.flatnonzero(seen == 0)[:10].tolist()} missing")

    @classmethod
    def from_lists(cls, clusters: Iterable[Iterable[int]], d: int) -> "Partition":
        return cls(tuple(IndexSet.of(c) for c in clusters), d)

    @classmethod
    def from_labels(cls, labels: Sequence[int]) -> "Partition":
        """Group pixel indices by label."""
        groups = {}
        for pixel, label in enumerate(labels):
            groups.setdefault(label, []).append(pixel)
        return cls.from_lists(groups.values(), len(labels))

    @classmethod
    def singletons(cls, d: int) -> "Partition":
        return cls.from_lists(([i] for i in range(d)), d)

    def __len__(self) -> int:
        return len(self.clusters)

    def __iter__(self):
        return iter(self.clusters)

    def labels(self) -> np.ndarray:
        """Cluster ordinal of every pixel."""
        out = np.empty(self.d, dtype=np.int64)
        for ordinal, cluster in enumerate(self.clusters):
            out[cluster.as_array()] = ordinal
        return out

    def order(self) -> np.ndarray:
        """Pixel permutation listing clusters one after another."""
        return np.concatenate([c.as_array() for c in self.clusters])

    def to_json_dict(self) -> dict:
        return {"d": self.d, "clusters": [list(c.indices) for c in self.clusters]}

    def as_lists(self) -> List[List[int]]:
        return [list(c.indices) for c in self.clusters]


def save_partition(p: Partition, path: str) -> None:
    try:
        with open(path, "w") as f:
            json.dump(p.to_json_dict(), f)
    except OSError as e:
        raise InputFormatError(f"cannot write partition {path}: {e}") from e
    logger.info(f"Saved partition with {len(p)} clusters over {p.d} pixels to {path}")


def load_partition(path: str) -> Partition:
    try:
        with open(path, "r") as f:
            raw = json.load(f)
    except FileNotFoundError as e:
        raise InputFormatError(f"partition file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise InputFormatError(f"malformed partition {path}: {e}") from e
    if not isinstance(raw, dict) or not isinstance(raw.get("d"), int) or not isinstance(raw.get("clusters"), list):
        raise InputFormatError(f"malformed partition {path}: expected {{\"d\": int, \"clusters\": [[int]]}}")
    try:
        return Partition.from_lists(raw["clusters"], raw["d"])
    except (TypeError, ValueError) as e:
        if isinstance(e, InputFormatError):
            raise
        raise InputFormatError(f"malformed partition {path}: {e}") from e
