"""
Scanning a directory of generator snapshots ``snap_<ordinal>.f32``.
"""

import logging
import re
from pathlib import Path
from typing import List

from .formats import Snapshot, SnapshotSeries
from .loader import load_sample_matrix
from ..errors import InputFormatError

logger = logging.getLogger(__name__)

_SNAPSHOT_NAME = re.compile(r"^snap_(\d+)\.f32$")


def load_snapshot_series(directory: str) -> SnapshotSeries:
    """Load every snapshot in ``directory``, ordered by numeric ordinal."""
    path = Path(directory)
    if not path.is_dir():
        raise InputFormatError(f"snapshot directory does not exist: {directory}")

    found = []
    for file in path.iterdir():
        match = _SNAPSHOT_NAME.match(file.name)
        if match and file.is_file():
            found.append((int(match.group(1)), file))
    if not found:
        raise InputFormatError(f"no snap_<ordinal>.f32 files in {directory}")

    found.sort(key=lambda item: item[0])
    snapshots: List[Snapshot] = []
    for ordinal, file in found:
        samples = load_sample_matrix(str(file))
        snapshots.append(Snapshot(label=file.stem, ordinal=ordinal, samples=samples))

    series = SnapshotSeries(snapshots)
    logger.info(f"Loaded {len(series)} snapshots from {directory} "
                f"(ordinals {found[0][0]}..{found[-1][0]})")
    return series
