"""
Exception hierarchy shared by all modules.

The CLI maps ``InputFormatError`` to exit code 2 and ``DegenerateDataError``
to exit code 3.
"""

from typing import Optional, Any


class CmsMonitorError(Exception):
    """Base class for all errors raised by this package."""


class InputFormatError(CmsMonitorError, ValueError):
    """Malformed, missing or unwritable input/output."""


class ShapeMismatchError(InputFormatError):
    """Two datasets, or a dataset and an index set, do not conform."""


class DegenerateDataError(CmsMonitorError, ValueError):
    """The data makes an estimator undefined (constant data, empty blocks)."""


class DegeneratePixelError(DegenerateDataError):
    """A pixel subset is constant within a block, so its CKA is undefined."""

    def __init__(self, message: str, subset: Optional[Any] = None, block: Optional[int] = None):
        super().__init__(message)
        self.subset = subset
        self.block = block
