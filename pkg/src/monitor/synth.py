"""
Synthetic images with independent pixel blocks.

Within a block every pixel mixes a shared Gaussian latent with its own noise:
``mean + shift + scale * (sqrt(coupling) * z + sqrt(1 - coupling) * eps)``.
Blocks draw from separate latents and are therefore independent. A coupling of
1 makes all pixels of a block copies of each other.
"""

import json
import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Dict, Any

import numpy as np

from ..clustering.partition import Partition
from ..errors import InputFormatError
from ..tensor_io.formats import SampleMatrix
from config.settings import SYNTH_SETTINGS

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BlockSource:
    """Distribution parameters of one independent pixel block."""
    size: int
    mean: float = 0.0
    scale: float = 1.0
    coupling: float = 0.8
    shift: float = 0.0

    def __post_init__(self):
        if self.size < 1:
            raise InputFormatError(f"block size must be >= 1, got {self.size}")
        if not 0.0 <= self.coupling <= 1.0:
            raise InputFormatError(f"coupling must lie in [0, 1], got {self.coupling}")
        if self.scale <= 0:
            raise InputFormatError(f"scale must be positive, got {self.scale}")

    def shifted(self, shift: float) -> "BlockSource":
        return BlockSource(self.size, self.mean, self.scale, self.coupling, shift)

    @classmethod
    def from_dict(cls, raw: Dict[str, Any]) -> "BlockSource":
        try:
            return cls(
                size=int(raw["size"]),
                mean=float(raw.get("mean", SYNTH_SETTINGS["default_mean"])),
                scale=float(raw.get("scale", SYNTH_SETTINGS["default_scale"])),
                coupling=float(raw.get("coupling", SYNTH_SETTINGS["default_coupling"])),
                shift=float(raw.get("shift", 0.0)),
            )
        except (KeyError, TypeError, ValueError) as e:
            if isinstance(e, InputFormatError):
                raise
            raise InputFormatError(f"malformed block description {raw}: {e}") from e


def synth_independent(blocks: Sequence[BlockSource], n: int, seed: int,
                      height: Optional[int] = None, width: Optional[int] = None,
                      channels: int = 1) -> SampleMatrix:
    """Draw n images whose consecutive pixel blocks are mutually independent.

    The grid defaults to a single row of d pixels; blocks fill pixel indices in order.
    """
    if n < 1:
        raise InputFormatError(f"n must be >= 1, got {n}")
    d = sum(b.size for b in blocks)
    if height is None and width is None:
        height, width = 1, d
    elif height is None or width is None or height * width != d:
        raise InputFormatError(f"block sizes sum to {d}, which does not match grid {height}x{width}")

    rng = np.random.default_rng(seed)
    data = np.empty((n, d, channels), dtype=np.float64)
    start = 0
    for block in blocks:
        z = rng.standard_normal((n, 1, 1))
        eps = rng.standard_normal((n, block.size, channels))
        mixed = np.sqrt(block.coupling) * z + np.sqrt(1.0 - block.coupling) * eps
        data[:, start:start + block.size, :] = block.mean + block.shift + block.scale * mixed
        start += block.size
    logger.debug(f"Synthesized n={n}, d={d}, {len(blocks)} blocks (seed {seed})")
    return SampleMatrix.from_array(data, height, width, channels)


def block_partition(blocks: Sequence[BlockSource]) -> Partition:
    """The ground-truth partition of consecutive blocks."""
    clusters, start = [], 0
    for block in blocks:
        clusters.append(range(start, start + block.size))
        start += block.size
    return Partition.from_lists(clusters, start)


def load_synth_spec(path: str) -> Dict[str, Any]:
    """Read ``{"height", "width", "channels", "blocks": [{"size", "mean", ...}]}``."""
    try:
        with open(path, "r") as f:
            raw = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise InputFormatError(f"cannot read synth spec {path}: {e}") from e
    if not isinstance(raw, dict) or not isinstance(raw.get("blocks"), list) or not raw["blocks"]:
        raise InputFormatError(f"synth spec {path} needs a nonempty 'blocks' list")
    return {
        "blocks": [BlockSource.from_dict(b) for b in raw["blocks"]],
        "height": raw.get("height"),
        "width": raw.get("width"),
        "channels": int(raw.get("channels", 1)),
    }
