"""
Dataset data model and on-disk formats for samples, snapshots and matrices.
"""

from .formats import DatasetMeta, SampleMatrix, Snapshot, SnapshotSeries, FileFormat
from .loader import load_sample_matrix, save_sample_matrix, read_sidecar, write_sidecar
from .snapshots import load_snapshot_series

__all__ = [
    "DatasetMeta",
    "SampleMatrix",
    "Snapshot",
    "SnapshotSeries",
    "FileFormat",
    "load_sample_matrix",
    "save_sample_matrix",
    "read_sidecar",
    "write_sidecar",
    "load_snapshot_series",
]
