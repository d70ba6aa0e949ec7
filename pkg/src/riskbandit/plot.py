"""Self-contained SVG rendering of aggregate regret curves."""
from __future__ import annotations

import csv
import math
from pathlib import Path
from xml.sax.saxutils import escape

from .harness import AGGREGATE_COLUMNS

WIDTH, HEIGHT = 720, 480
MARGIN = {"left": 80, "right": 160, "top": 40, "bottom": 60}
PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"]


class PlotError(ValueError):
    pass


def read_aggregate(path: str | Path) -> dict[str, list[tuple[int, float, float]]]:
    """Rows of an aggregate CSV grouped by policy as ``(t, mean, stderr)`` sorted by ``t``."""
    series: dict[str, list[tuple[int, float, float]]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != AGGREGATE_COLUMNS:
            raise PlotError(f"row 1: expected header {','.join(AGGREGATE_COLUMNS)}, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(AGGREGATE_COLUMNS):
                raise PlotError(f"row {lineno}: expected {len(AGGREGATE_COLUMNS)} fields, got {len(row)}")
            try:
                t, mean, se = int(row[2]), float(row[3]), float(row[4])
                int(row[5])
            except ValueError as exc:
                raise PlotError(f"row {lineno}: {exc}") from exc
            if not (math.isfinite(mean) and math.isfinite(se)):
                raise PlotError(f"row {lineno}: non-finite value")
            series.setdefault(row[0], []).append((t, mean, se))
    if not series:
        raise PlotError("no policies in aggregate CSV")
    return {p: sorted(v) for p, v in sorted(series.items())}


def _nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    span = hi - lo
    if span <= 0:
        return [lo]
    raw = span / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    return [start + k * step for k in range(int((hi - start) / step + 1e-9) + 1)]


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def render_svg(series: dict[str, list[tuple[int, float, float]]], title: str = "Intermediate regret") -> str:
    if not series:
        raise PlotError("nothing to plot")
    t_max = max(t for rows in series.values() for t, _, _ in rows)
    y_hi = max(m + s for rows in series.values() for _, m, s in rows)
    y_lo = min(0.0, min(m - s for rows in series.values() for _, m, s in rows))
    y_hi = y_hi if y_hi > y_lo else y_lo + 1.0
    x0, x1 = MARGIN["left"], WIDTH - MARGIN["right"]
    y0, y1 = HEIGHT - MARGIN["bottom"], MARGIN["top"]

    def sx(t: float) -> float:
        return x0 + (x1 - x0) * t / t_max

    def sy(v: float) -> float:
        return y0 - (y0 - y1) * (v - y_lo) / (y_hi - y_lo)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{(x0 + x1) / 2}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{escape(title)}</text>',
        f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>',
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>',
    ]
    for t in _nice_ticks(0, t_max):
        out.append(f'<line x1="{sx(t):.2f}" y1="{y0}" x2="{sx(t):.2f}" y2="{y0 + 5}" stroke="black"/>')
        out.append(f'<text x="{sx(t):.2f}" y="{y0 + 20}" text-anchor="middle" font-family="sans-serif" font-size="11">{_fmt(t)}</text>')
    for v in _nice_ticks(y_lo, y_hi):
        out.append(f'<line x1="{x0 - 5}" y1="{sy(v):.2f}" x2="{x0}" y2="{sy(v):.2f}" stroke="black"/>')
        out.append(f'<text x="{x0 - 8}" y="{sy(v) + 4:.2f}" text-anchor="end" font-family="sans-serif" font-size="11">{_fmt(v)}</text>')
    out.append(f'<text x="{(x0 + x1) / 2}" y="{HEIGHT - 15}" text-anchor="middle" font-family="sans-serif" font-size="13">t</text>')
    out.append(
        f'<text x="18" y="{(y0 + y1) / 2}" text-anchor="middle" font-family="sans-serif" font-size="13" '
        f'transform="rotate(-90 18 {(y0 + y1) / 2})">mean intermediate regret</text>'
    )

    for k, (policy, rows) in enumerate(series.items()):
        color = PALETTE[k % len(PALETTE)]
        upper = " ".join(f"{sx(t):.2f},{sy(m + s):.2f}" for t, m, s in rows)
        lower = " ".join(f"{sx(t):.2f},{sy(m - s):.2f}" for t, m, s in reversed(rows))
        out.append(f'<polygon points="{upper} {lower}" fill="{color}" fill-opacity="0.2" stroke="none"/>')
        line = " ".join(f"{sx(t):.2f},{sy(m):.2f}" for t, m, _ in rows)
        out.append(f'<polyline points="{line}" fill="none" stroke="{color}" stroke-width="2"><title>{escape(policy)}</title></polyline>')
        ly = y1 + 20 * k + 10
        out.append(f'<line x1="{x1 + 15}" y1="{ly}" x2="{x1 + 40}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{x1 + 45}" y="{ly + 4}" font-family="sans-serif" font-size="12">{escape(policy)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def plot(csv_path: str | Path, svg_path: str | Path, title: str | None = None) -> Path:
    series = read_aggregate(csv_path)
    svg_path = Path(svg_path)
    svg_path.write_text(render_svg(series, title or "Intermediate regret"))
    return svg_path
