"""
Writing monitoring reports: JSON lines, header JSON, CSV, SVG curves and an
optional Excel workbook.
"""

import json
import logging
import os
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd

from ..errors import InputFormatError
from .svg_charts import render_curves, render_cluster_map, cluster_color
from config.settings import REPORT_CONFIG

logger = logging.getLogger(__name__)

SUPPORTED_FORMATS = ("json", "csv", "svg", "xlsx")


def reports_frame(reports: Sequence[Any]) -> pd.DataFrame:
    """One row per snapshot: ordinal, image_cms, product_cms, mmd2, cluster_1..C, then external columns."""
    rows = []
    for report in reports:
        row = {
            "ordinal": report.ordinal,
            "image_cms": report.image_cms,
            "product_cms": report.product_cms,
            "mmd2": report.mmd2,
        }
        for c, value in enumerate(report.cluster_cms, start=1):
            row[f"cluster_{c}"] = value
        row.update(report.external)
        rows.append(row)
    return pd.DataFrame(rows)


class ReportEmitter:
    """Writes a list of monitor reports into one output directory."""

    def __init__(self, out_dir: str, report_config: Optional[Dict[str, Any]] = None):
        self.out_dir = out_dir
        self.config = report_config or REPORT_CONFIG
        self.logger = logging.getLogger(__name__)
        try:
            os.makedirs(out_dir, exist_ok=True)
        except OSError as e:
            raise InputFormatError(f"cannot create output directory {out_dir}: {e}") from e

    def _path(self, key: str) -> str:
        return os.path.join(self.out_dir, self.config[key])

    def _write_text(self, path: str, text: str) -> str:
        try:
            with open(path, "w", encoding="utf-8", newline="\n") as f:
                f.write(text)
        except OSError as e:
            raise InputFormatError(f"cannot write {path}: {e}") from e
        return path

    def write_jsonl(self, reports: Sequence[Any]) -> str:
        lines = [json.dumps(r.to_json_dict()) for r in reports]
        return self._write_text(self._path("jsonl_name"), "\n".join(lines) + "\n")

    def write_header(self, header: Dict[str, Any]) -> str:
        return self._write_text(self._path("header_name"), json.dumps(header, indent=2, sort_keys=True) + "\n")

    def write_csv(self, reports: Sequence[Any]) -> str:
        path = self._path("csv_name")
        try:
            reports_frame(reports).to_csv(path, index=False, lineterminator="\n")
        except OSError as e:
            raise InputFormatError(f"cannot write {path}: {e}") from e
        return path

    def write_svg(self, reports: Sequence[Any]) -> str:
        svg = self.config["svg"]
        ordinals = [r.ordinal for r in reports]
        series = {"image_cms": [r.image_cms for r in reports], "product_cms": [r.product_cms for r in reports]}
        colors = {"image_cms": svg["image_color"], "product_cms": svg["product_color"]}
        for c in range(len(reports[0].cluster_cms)):
            name = f"cluster_{c + 1}"
            series[name] = [r.cluster_cms[c] for r in reports]
            colors[name] = cluster_color(c)
        return self._write_text(self._path("svg_name"), render_curves(ordinals, series, colors))

    def write_cluster_map(self, partition, meta) -> str:
        text = render_cluster_map(partition.labels(), meta.height, meta.width)
        return self._write_text(self._path("cluster_map_name"), text)

    def write_xlsx(self, reports: Sequence[Any], header: Optional[Dict[str, Any]] = None) -> str:
        """Workbook with a "Curves" and a "Summary" sheet; falls back to CSV without openpyxl."""
        frame = reports_frame(reports)
        path = self._path("xlsx_name")
        try:
            from openpyxl import Workbook
            from openpyxl.styles import Font, PatternFill
        except ImportError:
            fallback = os.path.splitext(path)[0] + ".csv"
            self.logger.warning(f"openpyxl not available, writing {fallback} instead")
            try:
                frame.to_csv(fallback, index=False, lineterminator="\n")
            except OSError as e:
                raise InputFormatError(f"cannot write {fallback}: {e}") from e
            return fallback

        wb = Workbook()
        wb.remove(wb.active)
        ws_curves = wb.create_sheet("Curves")
        ws_curves.append(list(frame.columns))
        for row in frame.itertuples(index=False):
            ws_curves.append([None if pd.isna(v) else (v.item() if hasattr(v, "item") else v) for v in row])

        ws_summary = wb.create_sheet("Summary")
        ws_summary.append(["Metric", "Value"])
        ws_summary.append(["Snapshots", len(reports)])
        ws_summary.append(["Clusters", len(reports[0].cluster_cms)])
        ws_summary.append(["Max gap", max(r.factorization_gap for r in reports)])
        ws_summary.append(["Corollary violations", sum(bool(r.corollary_violation) for r in reports)])
        for key, value in sorted((header or {}).items()):
            ws_summary.append([key, value if isinstance(value, (int, float, str)) or value is None else str(value)])

        for ws in (ws_curves, ws_summary):
            for cell in ws[1]:
                cell.font = Font(bold=True)
                cell.fill = PatternFill(start_color="DDDDDD", end_color="DDDDDD", fill_type="solid")
            for column_cells in ws.columns:
                longest = max(len(str(c.value)) for c in column_cells if c.value is not None)
                ws.column_dimensions[column_cells[0].column_letter].width = longest + 2
        try:
            wb.save(path)
        except OSError as e:
            raise InputFormatError(f"cannot write {path}: {e}") from e
        return path

    def emit(self, reports: Sequence[Any], formats: Sequence[str], header: Optional[Dict[str, Any]] = None,
             partition=None, meta=None) -> List[str]:
        written = []
        if "json" in formats:
            written.append(self.write_jsonl(reports))
            if header is not None:
                written.append(self.write_header(header))
        if "csv" in formats:
            written.append(self.write_csv(reports))
        if "svg" in formats:
            written.append(self.write_svg(reports))
            if partition is not None and meta is not None and meta.d == partition.d:
                written.append(self.write_cluster_map(partition, meta))
        if "xlsx" in formats:
            written.append(self.write_xlsx(reports, header))
        self.logger.info(f"Wrote {len(written)} report files to {self.out_dir}")
        return written


def report_emit(reports: Sequence[Any], out_dir: str, formats: Optional[Sequence[str]] = None,
                header: Optional[Dict[str, Any]] = None, partition=None, meta=None) -> List[str]:
    """Write ``reports`` in the requested formats; returns the written paths."""
    if not reports:
        raise InputFormatError("report_emit needs a nonempty list of reports")
    formats = list(formats or REPORT_CONFIG["formats"])
    unknown = [f for f in formats if f not in SUPPORTED_FORMATS]
    if unknown:
        raise InputFormatError(f"unknown report formats {unknown}; choose from {list(SUPPORTED_FORMATS)}")
    return ReportEmitter(out_dir).emit(reports, formats, header, partition, meta)
