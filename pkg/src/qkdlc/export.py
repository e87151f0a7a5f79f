"""CSV, JSON and SVG output for sweep records.

Floats are written with 17 significant digits so every value parses back to
the identical double. SVG heatmaps are assembled by hand, with no plotting
dependency, and are byte-stable for equal input.
"""
from __future__ import annotations

import json
import math
from contextlib import contextmanager
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

from .errors import DomainError
from .optimize import SweepRecord

CSV_FIELDS = ("distance_km", "leak_fraction", "intensity_lc", "intensity_base", "rate_lc", "rate_base", "ratio")
VALUE_COLUMNS = CSV_FIELDS[2:]

SENTINEL_COLOR = "#d9d9d9"
# viridis, sampled at 9 evenly spaced points
_CMAP = np.array([
    (0x44, 0x01, 0x54), (0x47, 0x2c, 0x7a), (0x3b, 0x51, 0x8b), (0x2c, 0x71, 0x8e), (0x21, 0x90, 0x8d),
    (0x27, 0xad, 0x81), (0x5c, 0xc8, 0x63), (0xaa, 0xdc, 0x32), (0xfd, 0xe7, 0x25),
], dtype=float)


def fmt(v: float) -> str:
    return f"{v:.17g}"


@contextmanager
def _sink(destination):
    """Yield a text stream; paths are opened for writing, streams pass through."""
    if hasattr(destination, "write"):
        yield destination
    else:
        with open(Path(destination), "w", newline="", encoding="utf-8") as fh:
            yield fh


def _write(text: str, destination) -> int:
    with _sink(destination) as fh:
        fh.write(text)
    return len(text.encode("utf-8"))


def _require(records: Sequence[SweepRecord]):
    if not records:
        raise DomainError("no records to write")


def csv_text(records: Sequence[SweepRecord]) -> str:
    _require(records)
    lines = [",".join(CSV_FIELDS)]
    for rec in records:
        lines.append(",".join(fmt(getattr(rec, f)) for f in CSV_FIELDS))
    return "\n".join(lines) + "\n"


def emit_csv(records: Sequence[SweepRecord], destination) -> int:
    """Write records as CSV; returns the number of bytes written."""
    return _write(csv_text(records), destination)


def read_csv(source) -> list[SweepRecord]:
    text = source.read() if hasattr(source, "read") else Path(source).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or tuple(lines[0].split(",")) != CSV_FIELDS:
        raise DomainError(f"expected CSV header {','.join(CSV_FIELDS)}")
    records = []
    for ln in lines[1:]:
        cols = ln.split(",")
        if len(cols) != len(CSV_FIELDS):
            raise DomainError(f"malformed CSV row: {ln!r}")
        records.append(SweepRecord(*(float(c) for c in cols)))
    return records


def _json_float(v: float):
    return v if math.isfinite(v) else repr(v)


def emit_json(records: Sequence[SweepRecord], destination, config: dict | None = None) -> int:
    """Records under ``records`` plus a ``config`` echo. inf/nan become strings."""
    _require(records)
    doc = {
        "config": config or {},
        "records": [{f: _json_float(getattr(r, f)) for f in CSV_FIELDS} for r in records],
    }
    return _write(json.dumps(doc, indent=2, sort_keys=False) + "\n", destination)


# ---------------------------------------------------------------------------
# SVG heatmap

def colormap(t: float) -> str:
    """Map ``t`` in [0, 1] to a hex colour on the viridis ramp."""
    t = min(max(t, 0.0), 1.0) * (len(_CMAP) - 1)
    i = min(int(t), len(_CMAP) - 2)
    rgb = _CMAP[i] + (t - i) * (_CMAP[i + 1] - _CMAP[i])
    return "#" + "".join(f"{int(round(c)):02x}" for c in rgb)


def grid_axes(records: Sequence[SweepRecord]) -> tuple[list[float], list[float]]:
    """Distinct distances and leaks; raises unless the records tile the full grid."""
    _require(records)
    ds = sorted({r.distance_km for r in records})
    rs = sorted({r.leak_fraction for r in records})
    cells = {(r.distance_km, r.leak_fraction) for r in records}
    if len(cells) != len(records) or len(cells) != len(ds) * len(rs):
        raise DomainError(
            f"records do not form a complete grid: {len(records)} records for {len(ds)}x{len(rs)} axes"
        )
    return ds, rs


def _tick_indices(n: int, max_ticks: int = 6) -> list[int]:
    if n <= max_ticks:
        return list(range(n))
    step = math.ceil((n - 1) / (max_ticks - 1))
    idx = list(range(0, n, step))
    if idx[-1] != n - 1:
        idx.append(n - 1)
    return idx


def svg_heatmap(
    records: Sequence[SweepRecord],
    value: str = "ratio",
    scale: str = "linear",
    title: str | None = None,
) -> str:
    if value not in VALUE_COLUMNS:
        raise DomainError(f"unknown value column {value!r}; expected one of {', '.join(VALUE_COLUMNS)}")
    if scale not in ("linear", "log"):
        raise DomainError(f"unknown colour scale {scale!r}")
    ds, rs = grid_axes(records)

    vals = {(r.distance_km, r.leak_fraction): getattr(r, value) for r in records}

    def usable(v):
        return math.isfinite(v) and (v > 0.0 or scale == "linear")

    def tr(v):
        return math.log10(v) if scale == "log" else v

    good = [tr(v) for v in vals.values() if usable(v)]
    lo, hi = (min(good), max(good)) if good else (0.0, 0.0)

    def color(v):
        if not usable(v):
            return SENTINEL_COLOR
        return colormap(0.5 if hi == lo else (tr(v) - lo) / (hi - lo))

    left, top, pw, ph = 90, 40, 480, 360
    width, height = left + pw + 150, top + ph + 70
    cw, ch = pw / len(ds), ph / len(rs)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{left + pw / 2:.2f}" y="24" text-anchor="middle" font-size="14">{escape(title)}</text>')
    out.append('<g class="cells">')
    for i, d in enumerate(ds):
        for j, r in enumerate(rs):
            v = vals[(d, r)]
            x = left + i * cw
            y = top + ph - (j + 1) * ch
            out.append(
                f'<rect class="cell" x="{x:.3f}" y="{y:.3f}" width="{cw:.3f}" height="{ch:.3f}" '
                f'fill="{color(v)}" data-distance="{fmt(d)}" data-leak="{fmt(r)}" data-value="{fmt(v)}"/>'
            )
    out.append("</g>")

    # axes
    out.append(f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    for i in _tick_indices(len(ds)):
        x = left + (i + 0.5) * cw
        out.append(f'<line x1="{x:.3f}" y1="{top + ph}" x2="{x:.3f}" y2="{top + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{x:.3f}" y="{top + ph + 18}" text-anchor="middle">{ds[i]:.4g}</text>')
    for j in _tick_indices(len(rs)):
        y = top + ph - (j + 0.5) * ch
        out.append(f'<line x1="{left - 5}" y1="{y:.3f}" x2="{left}" y2="{y:.3f}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{y + 4:.3f}" text-anchor="end">{rs[j]:.4g}</text>')
    out.append(
        f'<text class="xlabel" x="{left + pw / 2:.2f}" y="{top + ph + 45}" text-anchor="middle">distance D (km)</text>'
    )
    out.append(
        f'<text class="ylabel" x="20" y="{top + ph / 2:.2f}" text-anchor="middle" '
        f'transform="rotate(-90 20 {top + ph / 2:.2f})">leak fraction r_E</text>'
    )

    # legend
    lx, lw, steps = left + pw + 30, 20, 64
    out.append('<g class="legend">')
    for k in range(steps):
        y = top + ph - (k + 1) * ph / steps
        out.append(
            f'<rect x="{lx}" y="{y:.3f}" width="{lw}" height="{ph / steps + 0.5:.3f}" '
            f'fill="{colormap(k / (steps - 1))}"/>'
        )
    vmin = 10.0 ** lo if scale == "log" and good else lo
    vmax = 10.0 ** hi if scale == "log" and good else hi
    label = value + (" (log)" if scale == "log" else "")
    out.append(f'<text class="legend-max" x="{lx + lw + 6}" y="{top + 10}">max {vmax:.4g}</text>')
    out.append(f'<text class="legend-min" x="{lx + lw + 6}" y="{top + ph}">min {vmin:.4g}</text>')
    out.append(f'<text x="{lx}" y="{top - 10}">{escape(label)}</text>')
    if any(not usable(v) for v in vals.values()):
        out.append(f'<rect x="{lx}" y="{top + ph + 20}" width="{lw}" height="12" fill="{SENTINEL_COLOR}"/>')
        out.append(f'<text x="{lx + lw + 6}" y="{top + ph + 30}">no value</text>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_svg_heatmap(records, value: str, scale: str, destination, title: str | None = None) -> int:
    """Render a heatmap of ``value`` over (distance, leak); returns bytes written."""
    return _write(svg_heatmap(records, value, scale, title), destination)
