"""
Report writers: JSON lines, CSV, SVG charts, Excel, and cross-run merging.
"""

from .emitter import ReportEmitter, report_emit, reports_frame, SUPPORTED_FORMATS
from .svg_charts import render_curves, render_cluster_map, cluster_color
from .merge import merge_reports, attach_external

__all__ = [
    "ReportEmitter",
    "report_emit",
    "reports_frame",
    "SUPPORTED_FORMATS",
    "render_curves",
    "render_cluster_map",
    "cluster_color",
    "merge_reports",
    "attach_external",
]
