"""
Loading and saving sample matrices as little-endian f32 payloads or CSV.

Raw layout: ``<name>.f32`` holds n * height * width * channels little-endian
IEEE floats (sample, then pixel row-major, then channel); ``<name>.f32.meta.json``
holds ``{"n", "height", "width", "channels"}``.
"""

import json
import logging
import math
import os
from typing import Optional, Union, Dict, Any

import numpy as np
import pandas as pd

from .formats import FileFormat, SampleMatrix
from ..errors import InputFormatError

logger = logging.getLogger(__name__)

SIDECAR_SUFFIX = ".meta.json"
_SIDECAR_KEYS = ("n", "height", "width", "channels")


def sidecar_path(path: str) -> str:
    return f"{path}{SIDECAR_SUFFIX}"


def read_sidecar(path: str, keys=_SIDECAR_KEYS) -> Dict[str, int]:
    """Read and validate the JSON sidecar of a payload file."""
    meta_path = sidecar_path(path)
    if not os.path.exists(meta_path):
        raise InputFormatError(f"missing sidecar {meta_path}")
    try:
        with open(meta_path, "r") as f:
            raw = json.load(f)
    except json.JSONDecodeError as e:
        raise InputFormatError(f"malformed sidecar {meta_path}: {e}") from e
    if not isinstance(raw, dict):
        raise InputFormatError(f"malformed sidecar {meta_path}: expected an object")
    sidecar = {}
    for key in keys:
        value = raw.get(key)
        if isinstance(value, bool) or not isinstance(value, int):
            raise InputFormatError(f"malformed sidecar {meta_path}: '{key}' must be an integer")
        sidecar[key] = value
    return sidecar


def write_sidecar(path: str, fields: Dict[str, Any]) -> None:
    try:
        with open(sidecar_path(path), "w") as f:
            json.dump(fields, f)
    except OSError as e:
        raise InputFormatError(f"cannot write {sidecar_path(path)}: {e}") from e


def load_sample_matrix(path: str, format: Optional[Union[FileFormat, str]] = None,
                       height: Optional[int] = None, width: Optional[int] = None,
                       channels: Optional[int] = None) -> SampleMatrix:
    """Load a sample matrix from a raw f32 payload or a CSV file."""
    fmt = FileFormat(format) if format is not None else FileFormat.from_path(path)
    if not os.path.exists(path):
        raise InputFormatError(f"file not found: {path}")

    if fmt is FileFormat.RAW_F32:
        matrix = _load_raw(path)
    else:
        matrix = _load_csv(path, height, width, channels)

    logger.debug(f"Loaded {path}: n={matrix.n}, d={matrix.d}, channels={matrix.channels}")
    return matrix


def _load_raw(path: str) -> SampleMatrix:
    sidecar = read_sidecar(path)
    n, h, w, c = (sidecar[k] for k in _SIDECAR_KEYS)
    if min(n, h, w, c) < 1:
        raise InputFormatError(f"malformed sidecar of {path}: {sidecar}")
    expected_bytes = n * h * w * c * 4
    actual_bytes = os.path.getsize(path)
    if actual_bytes != expected_bytes:
        raise InputFormatError(
            f"dimension mismatch: {path} has {actual_bytes} bytes, sidecar "
            f"{{n:{n}, height:{h}, width:{w}, channels:{c}}} requires {expected_bytes}"
        )
    values = np.fromfile(path, dtype="<f4")
    return SampleMatrix.from_array(values.astype(np.float64), h, w, c)


def _load_csv(path: str, height: Optional[int], width: Optional[int],
              channels: Optional[int]) -> SampleMatrix:
    try:
        frame = pd.read_csv(path, header=None, dtype=np.float64, float_precision="round_trip")
    except pd.errors.EmptyDataError as e:
        raise InputFormatError(f"empty CSV file {path}") from e
    except (ValueError, pd.errors.ParserError) as e:
        raise InputFormatError(f"malformed CSV file {path}: {e}") from e
    values = frame.to_numpy(dtype=np.float64)
    columns = values.shape[1]

    if height is None or width is None:
        if os.path.exists(sidecar_path(path)):
            sidecar = read_sidecar(path)
            height, width = sidecar["height"], sidecar["width"]
            channels = sidecar["channels"] if channels is None else channels
        else:
            channels = 1 if channels is None else channels
            side = math.isqrt(columns // channels) if columns % channels == 0 else 0
            if side * side * channels != columns:
                raise InputFormatError(
                    f"cannot infer image shape of {path}: {columns} columns is not a square grid"
                )
            height = width = side
    channels = 1 if channels is None else channels
    if height * width * channels != columns:
        raise InputFormatError(
            f"dimension mismatch: {path} has {columns} columns, expected {height}*{width}*{channels}"
        )
    return SampleMatrix.from_array(values, height, width, channels)


def save_sample_matrix(m: SampleMatrix, path: str, format: Optional[Union[FileFormat, str]] = None) -> None:
    """Write a sample matrix and its sidecar."""
    fmt = FileFormat(format) if format is not None else FileFormat.from_path(path)
    directory = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(directory):
        raise InputFormatError(f"cannot write {path}: directory does not exist")
    try:
        if fmt is FileFormat.RAW_F32:
            m.data.astype("<f4").tofile(path)
        else:
            pd.DataFrame(m.features()).to_csv(path, header=False, index=False)
    except OSError as e:
        raise InputFormatError(f"cannot write {path}: {e}") from e
    write_sidecar(path, m.meta.to_sidecar())
    logger.debug(f"Saved {path} ({fmt.value}): n={m.n}, d={m.d}")
