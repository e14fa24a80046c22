"""
Cross-run averaging of report CSVs and merging of externally computed metrics.
"""

import dataclasses
import logging
from typing import Any, List, Sequence

import pandas as pd

from ..errors import InputFormatError

logger = logging.getLogger(__name__)


def _read_csv(path: str) -> pd.DataFrame:
    try:
        frame = pd.read_csv(path)
    except FileNotFoundError as e:
        raise InputFormatError(f"file not found: {path}") from e
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise InputFormatError(f"malformed CSV {path}: {e}") from e
    if "ordinal" not in frame.columns:
        raise InputFormatError(f"{path} has no 'ordinal' column")
    return frame


def merge_reports(csv_paths: Sequence[str]) -> pd.DataFrame:
    """Average report CSVs of several runs by snapshot ordinal.

    All runs must share the same columns. The result has one row per ordinal
    (sorted) and an extra ``runs`` column counting the runs that contributed.
    """
    if not csv_paths:
        raise InputFormatError("merge needs at least one report CSV")
    frames = [_read_csv(p) for p in csv_paths]
    columns = list(frames[0].columns)
    for path, frame in zip(csv_paths[1:], frames[1:]):
        if list(frame.columns) != columns:
            raise InputFormatError(f"{path} has columns {list(frame.columns)}, expected {columns}")
    combined = pd.concat(frames, ignore_index=True)
    grouped = combined.groupby("ordinal", sort=True)
    merged = grouped.mean(numeric_only=True)
    merged["runs"] = grouped.size()
    logger.info(f"Merged {len(frames)} runs into {len(merged)} snapshots")
    return merged.reset_index()


def attach_external(reports: Sequence[Any], csv_path: str) -> List[Any]:
    """Copy per-ordinal metric columns (e.g. FID, KID) from a CSV into each report's ``external`` mapping."""
    frame = _read_csv(csv_path)
    duplicated = frame["ordinal"][frame["ordinal"].duplicated()].unique().tolist()
    if duplicated:
        raise InputFormatError(f"{csv_path} repeats ordinals {duplicated}")
    non_numeric = [c for c in frame.columns if not pd.api.types.is_numeric_dtype(frame[c])]
    if non_numeric:
        raise InputFormatError(f"{csv_path} has non-numeric columns {non_numeric}")
    frame = frame.set_index("ordinal")
    out = []
    for report in reports:
        if report.ordinal not in frame.index:
            out.append(report)
            continue
        row = frame.loc[report.ordinal]
        external = {m: float(row[m]) for m in frame.columns if pd.notna(row[m])}
        out.append(dataclasses.replace(report, external=external))
    return out
