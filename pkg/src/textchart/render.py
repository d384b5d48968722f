"""Chart records and SVG output for bar, line and pie charts."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence
from xml.sax.saxutils import escape, quoteattr

CURRENCY = "$€£¥₹৳"
DEFAULT_PALETTE = ("#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
                   "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac")


class RenderError(ValueError):
    pass


@dataclass
class RenderConfig:
    width: int = 640
    height: int = 400
    margin: int = 48
    palette: Sequence[str] = field(default_factory=lambda: list(DEFAULT_PALETTE))

    def __post_init__(self):
        if self.width <= 2 * self.margin or self.height <= 2 * self.margin or self.margin < 0:
            raise RenderError("width and height must exceed twice the margin")
        if not self.palette:
            raise RenderError("palette must not be empty")


@dataclass
class NumericSeries:
    labels: list[str]
    values: list[float]

    def __post_init__(self):
        if len(self.labels) != len(self.values):
            raise RenderError("labels and values differ in length")
        if not all(math.isfinite(v) for v in self.values):
            raise RenderError("values must be finite")


def parse_number(surface: str) -> float:
    s = surface.strip()
    if s and s[0] in CURRENCY:
        s = s[1:].strip()
    if s.endswith("%"):
        s = s[:-1].strip()
    s = s.replace(",", "")
    value = float(s)  # ValueError propagates
    if not math.isfinite(value):
        raise ValueError(f"non-finite value {surface!r}")
    return value


def coerce_numeric(spec) -> NumericSeries:
    """Parse every y surface of ``spec``; fails on the first unparseable one."""
    values = []
    for i, surface in enumerate(spec.y_values):
        try:
            values.append(parse_number(surface))
        except ValueError:
            raise RenderError(f"y value {i} is not numeric: {surface!r}") from None
    return NumericSeries(list(spec.x_labels), values)


def chart_record(spec) -> dict:
    series = coerce_numeric(spec)
    order = ("bar", "pie", "line")
    return {
        "x_labels": series.labels,
        "y_values": series.values,
        "chart_types": [t for t in order if t in spec.chart_types],
    }


def pie_angles(values: Sequence[float]) -> list[float]:
    if any(v < 0 for v in values):
        raise RenderError("pie values must be non-negative")
    total = float(sum(values))
    if total <= 0:
        raise RenderError("pie values must have a positive sum")
    return [360.0 * v / total for v in values]


def _f(v: float) -> str:
    text = f"{v:.3f}".rstrip("0").rstrip(".")
    return "0" if text in ("-0", "") else text


def _value_axis(values: Sequence[float]) -> tuple[float, float]:
    lo = min(0.0, min(values))
    hi = 1.05 * max(values) if max(values) > 0 else 0.0
    if hi <= lo:
        hi = lo + 1.0
    return lo, hi


class _Doc:
    def __init__(self, cfg: RenderConfig, title: str):
        self.cfg = cfg
        self.parts = [
            '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{cfg.width}" '
            f'height="{cfg.height}" viewBox="0 0 {cfg.width} {cfg.height}">',
            f"<title>{escape(title)}</title>",
            f'<rect class="background" x="0" y="0" width="{cfg.width}" height="{cfg.height}" fill="#ffffff"/>',
        ]

    def add(self, element: str) -> None:
        self.parts.append(element)

    def text(self, x: float, y: float, content: str, anchor: str = "middle", size: int = 11) -> None:
        self.add(f'<text x="{_f(x)}" y="{_f(y)}" text-anchor="{anchor}" '
                 f'font-family="sans-serif" font-size="{size}">{escape(content)}</text>')

    def bytes(self) -> bytes:
        return ("\n".join(self.parts + ["</svg>"]) + "\n").encode("utf-8")


def _axes(doc: _Doc, lo: float, hi: float):
    cfg = doc.cfg
    left, right = cfg.margin, cfg.width - cfg.margin
    top, bottom = cfg.margin, cfg.height - cfg.margin

    def to_y(v: float) -> float:
        return bottom - (v - lo) / (hi - lo) * (bottom - top)

    doc.add(f'<line class="axis" x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}" stroke="#333333"/>')
    doc.add(f'<line class="axis" x1="{left}" y1="{top}" x2="{left}" y2="{bottom}" stroke="#333333"/>')
    for j in range(5):
        v = lo + (hi - lo) * j / 4
        doc.text(left - 6, to_y(v) + 4, f"{v:.4g}", anchor="end", size=10)
    return left, right, top, bottom, to_y


def _bar(doc: _Doc, series: NumericSeries) -> None:
    lo, hi = _value_axis(series.values)
    left, right, top, bottom, to_y = _axes(doc, lo, hi)
    slot = (right - left) / len(series.values)
    for j, (label, v) in enumerate(zip(series.labels, series.values)):
        x = left + slot * (j + 0.1)
        y = to_y(v)
        color = doc.cfg.palette[j % len(doc.cfg.palette)]
        doc.add(f'<rect class="bar" x="{_f(x)}" y="{_f(y)}" width="{_f(slot * 0.8)}" '
                f'height="{_f(bottom - y)}" fill={quoteattr(color)}/>')
        doc.text(left + slot * (j + 0.5), bottom + 16, label)


def _line(doc: _Doc, series: NumericSeries) -> None:
    lo, hi = _value_axis(series.values)
    left, right, top, bottom, to_y = _axes(doc, lo, hi)
    slot = (right - left) / len(series.values)
    pts = [(left + slot * (j + 0.5), to_y(v)) for j, v in enumerate(series.values)]
    color = doc.cfg.palette[0]
    doc.add(f'<polyline class="line" fill="none" stroke={quoteattr(color)} stroke-width="2" '
            f'points="{" ".join(f"{_f(x)},{_f(y)}" for x, y in pts)}"/>')
    for (x, y), label in zip(pts, series.labels):
        doc.add(f'<circle class="marker" cx="{_f(x)}" cy="{_f(y)}" r="3.5" fill={quoteattr(color)}/>')
        doc.text(x, bottom + 16, label)


def _pie(doc: _Doc, series: NumericSeries) -> None:
    angles = pie_angles(series.values)
    cfg = doc.cfg
    cx, cy = cfg.width / 2, cfg.height / 2
    r = min(cfg.width, cfg.height) / 2 - cfg.margin
    start = 0.0
    for j, (label, sweep) in enumerate(zip(series.labels, angles)):
        end = start + sweep
        color = cfg.palette[j % len(cfg.palette)]

        def point(deg: float) -> tuple[float, float]:
            rad = math.radians(deg - 90.0)
            return cx + r * math.cos(rad), cy + r * math.sin(rad)

        x0, y0 = point(start)
        if sweep >= 360.0 - 1e-9:
            xm, ym = point(start + 180.0)
            d = (f"M {_f(x0)} {_f(y0)} A {_f(r)} {_f(r)} 0 1 1 {_f(xm)} {_f(ym)} "
                 f"A {_f(r)} {_f(r)} 0 1 1 {_f(x0)} {_f(y0)} Z")
        else:
            x1, y1 = point(end)
            large = 1 if sweep > 180.0 else 0
            d = (f"M {_f(cx)} {_f(cy)} L {_f(x0)} {_f(y0)} "
                 f"A {_f(r)} {_f(r)} 0 {large} 1 {_f(x1)} {_f(y1)} Z")
        doc.add(f'<path class="wedge" d="{d}" fill={quoteattr(color)} stroke="#ffffff"/>')
        lx, ly = point(start + sweep / 2)
        doc.text(cx + (lx - cx) * 1.15, cy + (ly - cy) * 1.15, label)
        start = end


def render_svg(series: NumericSeries, chart_type: str, config: RenderConfig | None = None) -> bytes:
    """Render ``series`` as an SVG 1.1 document."""
    config = config or RenderConfig()
    if not series.values:
        raise RenderError("nothing to render: empty series")
    draw = {"bar": _bar, "line": _line, "pie": _pie}.get(chart_type)
    if draw is None:
        raise RenderError(f"unknown chart type {chart_type!r}")
    doc = _Doc(config, f"{chart_type} chart")
    draw(doc, series)
    return doc.bytes()
