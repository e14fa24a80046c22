"""
Pixel-wise kernels, product kernels over index subsets and bandwidth selection.
"""

from .pixel_kernels import (
    KernelFamily,
    KernelSpec,
    IndexSet,
    GramMatrix,
    pixel_kernel,
    product_kernel,
    product_log_kernel,
    kernel_matrix,
    gram,
)
from .bandwidth import median_heuristic_gamma

__all__ = [
    "KernelFamily",
    "KernelSpec",
    "IndexSet",
    "GramMatrix",
    "pixel_kernel",
    "product_kernel",
    "product_log_kernel",
    "kernel_matrix",
    "gram",
    "median_heuristic_gamma",
]
