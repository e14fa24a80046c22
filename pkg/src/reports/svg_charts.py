"""
SVG rendering of CMS curves and of the pixel cluster map.

Both charts are rendered from jinja2 templates with fixed canvas size and
colors, so identical inputs give byte-identical files.
"""

import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from jinja2 import Environment

from config.settings import REPORT_CONFIG

logger = logging.getLogger(__name__)

_env = Environment(autoescape=True, trim_blocks=True, lstrip_blocks=True)

CURVES_TEMPLATE = _env.from_string("""<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {{ width }} {{ height }}" width="{{ width }}" height="{{ height }}">
<rect x="0" y="0" width="{{ width }}" height="{{ height }}" fill="#ffffff"/>
<text x="{{ width / 2 }}" y="{{ margin / 2 }}" text-anchor="middle" font-family="sans-serif" font-size="16">{{ title }}</text>
<line x1="{{ left }}" y1="{{ bottom }}" x2="{{ right }}" y2="{{ bottom }}" stroke="#000000"/>
<line x1="{{ left }}" y1="{{ top }}" x2="{{ left }}" y2="{{ bottom }}" stroke="#000000"/>
{% for tick in y_ticks %}
<line x1="{{ left - 5 }}" y1="{{ tick.pos }}" x2="{{ right }}" y2="{{ tick.pos }}" stroke="#e0e0e0"/>
<text x="{{ left - 8 }}" y="{{ tick.pos }}" text-anchor="end" dominant-baseline="middle" font-family="sans-serif" font-size="11">{{ tick.label }}</text>
{% endfor %}
{% for tick in x_ticks %}
<line x1="{{ tick.pos }}" y1="{{ bottom }}" x2="{{ tick.pos }}" y2="{{ bottom + 5 }}" stroke="#000000"/>
<text x="{{ tick.pos }}" y="{{ bottom + 18 }}" text-anchor="middle" font-family="sans-serif" font-size="11">{{ tick.label }}</text>
{% endfor %}
<text x="{{ (left + right) / 2 }}" y="{{ height - 12 }}" text-anchor="middle" font-family="sans-serif" font-size="12">{{ x_label }}</text>
{% for series in curves %}
<polyline fill="none" stroke="{{ series.color }}" stroke-width="{{ series.stroke }}"{% if series.dashed %} stroke-dasharray="6,4"{% endif %} points="{{ series.points }}"/>
{% endfor %}
{% for series in curves %}
<line x1="{{ legend_x }}" y1="{{ top + 16 * loop.index0 + 8 }}" x2="{{ legend_x + 20 }}" y2="{{ top + 16 * loop.index0 + 8 }}" stroke="{{ series.color }}" stroke-width="2"/>
<text x="{{ legend_x + 26 }}" y="{{ top + 16 * loop.index0 + 12 }}" font-family="sans-serif" font-size="11">{{ series.name }}</text>
{% endfor %}
</svg>
""")

CLUSTER_MAP_TEMPLATE = _env.from_string("""<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {{ width }} {{ height }}" width="{{ width }}" height="{{ height }}">
<rect x="0" y="0" width="{{ width }}" height="{{ height }}" fill="#ffffff"/>
<text x="{{ width / 2 }}" y="{{ margin / 2 }}" text-anchor="middle" font-family="sans-serif" font-size="16">{{ title }}</text>
{% for cell in cells %}
<rect x="{{ cell.x }}" y="{{ cell.y }}" width="{{ size }}" height="{{ size }}" fill="{{ cell.color }}"/>
{% endfor %}
{% for entry in legend %}
<rect x="{{ legend_x }}" y="{{ margin + 16 * loop.index0 }}" width="12" height="12" fill="{{ entry.color }}"/>
<text x="{{ "%.2f"|format(legend_x|float + 18) }}" y="{{ margin + 16 * loop.index0 + 10 }}" font-family="sans-serif" font-size="11">{{ entry.name }}</text>
{% endfor %}
</svg>
""")


def _fmt(value: float) -> str:
    return f"{value:.2f}"


def cluster_color(ordinal: int) -> str:
    """Color of cluster ``ordinal`` (0-based), cycling through the palette."""
    palette = REPORT_CONFIG["svg"]["palette"]
    return palette[ordinal % len(palette)]


def _value_range(values: Sequence[float]) -> Tuple[float, float]:
    lo = min(0.0, min(values))
    hi = max(1.0, max(values))
    return lo, hi


def render_curves(ordinals: Sequence[int], series: Dict[str, Sequence[float]],
                  colors: Optional[Dict[str, str]] = None, title: str = "CMS during training") -> str:
    """Line chart of every series against the snapshot ordinal.

    Series are drawn in the insertion order of ``series``; missing colors are
    taken from the palette by position.
    """
    svg = REPORT_CONFIG["svg"]
    width, height, margin = svg["width"], svg["height"], svg["margin"]
    left, right, top, bottom = margin, width - margin - 140, margin, height - margin
    colors = colors or {}

    values = [v for vs in series.values() for v in vs if v is not None]
    lo, hi = _value_range(values) if values else (0.0, 1.0)
    x_min, x_max = min(ordinals), max(ordinals)

    def x_pos(ordinal: int) -> float:
        if x_max == x_min:
            return (left + right) / 2
        return left + (ordinal - x_min) / (x_max - x_min) * (right - left)

    def y_pos(value: float) -> float:
        return bottom - (value - lo) / (hi - lo) * (bottom - top)

    curves = []
    for position, (name, vals) in enumerate(series.items()):
        points = " ".join(f"{_fmt(x_pos(o))},{_fmt(y_pos(v))}" for o, v in zip(ordinals, vals) if v is not None)
        curves.append({
            "name": name,
            "color": colors.get(name, cluster_color(position)),
            "points": points,
            "stroke": 2.5 if position < 2 else 1.5,
            "dashed": name == "product_cms",
        })

    y_ticks = [{"pos": _fmt(y_pos(v)), "label": f"{v:.2f}"} for v in np.linspace(lo, hi, 6)]
    step = max(1, len(ordinals) // 10)
    x_ticks = [{"pos": _fmt(x_pos(o)), "label": str(o)} for o in list(ordinals)[::step]]

    return CURVES_TEMPLATE.render(
        width=width, height=height, margin=margin, left=left, right=right, top=top, bottom=bottom,
        title=title, x_label="snapshot", y_ticks=y_ticks, x_ticks=x_ticks, curves=curves,
        legend_x=right + 20,
    )


def render_cluster_map(labels: np.ndarray, height_px: int, width_px: int,
                       title: str = "Pixel clusters") -> str:
    """Pixel grid colored by cluster ordinal; ``labels`` is the row-major cluster index of each pixel."""
    svg = REPORT_CONFIG["svg"]
    width, height, margin = svg["width"], svg["height"], svg["margin"]
    size = min((width - 2 * margin - 140) / width_px, (height - 2 * margin) / height_px)

    cells: List[Dict[str, str]] = []
    for pixel, label in enumerate(labels.tolist()):
        row, col = divmod(pixel, width_px)
        cells.append({"x": _fmt(margin + col * size), "y": _fmt(margin + row * size),
                      "color": cluster_color(int(label))})
    n_clusters = int(labels.max()) + 1 if labels.size else 0
    legend = [{"name": f"cluster_{c + 1}", "color": cluster_color(c)} for c in range(min(n_clusters, 20))]
    return CLUSTER_MAP_TEMPLATE.render(
        width=width, height=height, margin=margin, title=title, cells=cells, size=_fmt(size),
        legend=legend, legend_x=_fmt(margin + width_px * size + 20),
    )
