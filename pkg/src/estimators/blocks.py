"""
Mini-batch block layout shared by the CMS/MMD and HSIC/CKA estimators.
"""

from dataclasses import dataclass
from typing import List, Sequence, Tuple

from ..errors import InputFormatError, DegenerateDataError
from config.settings import ESTIMATOR_SETTINGS


@dataclass(frozen=True)
class EstimatorConfig:
    """Block sizes of the estimators.

    With ``block_mode`` off every estimator runs on one block holding all samples.
    """
    cms_batch: int = 150
    cka_batch: int = 100
    drop_remainder: bool = True
    block_mode: bool = True

    def __post_init__(self):
        if self.cms_batch < 2 or self.cka_batch < 2:
            raise InputFormatError(
                f"batch sizes must be >= 2, got cms_batch={self.cms_batch}, cka_batch={self.cka_batch}"
            )

    @classmethod
    def from_settings(cls, **overrides) -> "EstimatorConfig":
        values = {key: ESTIMATOR_SETTINGS[key] for key in ("cms_batch", "cka_batch", "drop_remainder", "block_mode")}
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


def block_slices(n: int, batch: int, drop_remainder: bool = True, min_size: int = 1) -> List[slice]:
    """Consecutive non-overlapping slices of ``batch`` rows.

    A trailing partial block is kept only when ``drop_remainder`` is off and it
    holds at least ``min_size`` rows.
    """
    slices = [slice(start, start + batch) for start in range(0, n - batch + 1, batch)]
    tail = n % batch
    if not drop_remainder and tail >= min_size:
        slices.append(slice(n - tail, n))
    return slices


def paired_block_slices(n_x: int, n_y: int, cfg: EstimatorConfig) -> List[Tuple[slice, slice]]:
    """Align the i-th block of X with the i-th block of Y; surplus blocks are discarded."""
    if not cfg.block_mode:
        return [(slice(0, n_x), slice(0, n_y))]
    xs = block_slices(n_x, cfg.cms_batch, cfg.drop_remainder)
    ys = block_slices(n_y, cfg.cms_batch, cfg.drop_remainder)
    pairs = list(zip(xs, ys))
    if not pairs:
        raise DegenerateDataError(
            f"empty block set after remainder dropping: n_x={n_x}, n_y={n_y}, batch={cfg.cms_batch}"
        )
    return pairs


def single_blocks(n: int, cfg: EstimatorConfig) -> List[slice]:
    """Blocks of one paired dataset for HSIC/CKA; every block has at least 2 rows."""
    if not cfg.block_mode:
        blocks = [slice(0, n)] if n >= 2 else []
    else:
        blocks = block_slices(n, cfg.cka_batch, cfg.drop_remainder, min_size=2)
    if not blocks:
        raise DegenerateDataError(f"block size < 2: cannot form HSIC blocks from {n} samples")
    return blocks


def block_mean(values: Sequence[float]) -> float:
    """Arithmetic mean accumulated left to right over block indices."""
    total = 0.0
    for value in values:
        total += value
    return total / len(values)
