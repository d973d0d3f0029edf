"""Minimal self-contained SVG line charts.

The output depends only on the data, so identical inputs give identical
files.  Non-finite points are dropped; an optional log scale applies to
the y axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from xml.sax.saxutils import escape

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


@dataclass
class Series:
    label: str
    x: list
    y: list
    dashed: bool = False


@dataclass
class LineChart:
    title: str
    xlabel: str
    ylabel: str
    series: list = field(default_factory=list)
    log_y: bool = False
    width: int = 640
    height: int = 400

    def add(self, label, x, y, dashed=False) -> "LineChart":
        self.series.append(Series(label, [float(v) for v in x], [float(v) for v in y], dashed))
        return self

    def _points(self, s: Series):
        out = []
        for a, b in zip(s.x, s.y):
            if not (math.isfinite(a) and math.isfinite(b)):
                continue
            if self.log_y:
                if b <= 0:
                    continue
                b = math.log10(b)
            out.append((a, b))
        return out

    def render(self) -> str:
        left, right, top, bottom = 70, 20, 40, 50
        pw, ph = self.width - left - right, self.height - top - bottom
        pts = [self._points(s) for s in self.series]
        flat = [p for ps in pts for p in ps]
        if flat:
            x0, x1 = min(p[0] for p in flat), max(p[0] for p in flat)
            y0, y1 = min(p[1] for p in flat), max(p[1] for p in flat)
        else:
            x0, x1, y0, y1 = 0.0, 1.0, 0.0, 1.0
        if x1 == x0:
            x0, x1 = x0 - 0.5, x1 + 0.5
        if y1 == y0:
            y0, y1 = y0 - 0.5, y1 + 0.5

        def sx(v):
            return left + (v - x0) / (x1 - x0) * pw

        def sy(v):
            return top + (y1 - v) / (y1 - y0) * ph

        lines = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" height="{self.height}" '
            f'viewBox="0 0 {self.width} {self.height}" font-family="sans-serif" font-size="12">',
            f'<rect width="{self.width}" height="{self.height}" fill="white"/>',
            f'<text x="{self.width / 2:.1f}" y="20" text-anchor="middle" font-size="14">{escape(self.title)}</text>',
            f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
        ]
        for i in range(5):
            xv = x0 + (x1 - x0) * i / 4
            yv = y0 + (y1 - y0) * i / 4
            ylab = f"1e{yv:.2g}" if self.log_y else f"{yv:.4g}"
            lines.append(f'<text x="{sx(xv):.1f}" y="{top + ph + 16}" text-anchor="middle">{xv:.4g}</text>')
            lines.append(f'<text x="{left - 6}" y="{sy(yv) + 4:.1f}" text-anchor="end">{ylab}</text>')
        lines.append(
            f'<text x="{left + pw / 2:.1f}" y="{self.height - 10}" text-anchor="middle">{escape(self.xlabel)}</text>'
        )
        ylabel = ("log10 " if self.log_y else "") + self.ylabel
        lines.append(
            f'<text x="16" y="{top + ph / 2:.1f}" text-anchor="middle" '
            f'transform="rotate(-90 16 {top + ph / 2:.1f})">{escape(ylabel)}</text>'
        )
        for k, (s, ps) in enumerate(zip(self.series, pts)):
            colour = PALETTE[k % len(PALETTE)]
            coords = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in ps)
            dash = ' stroke-dasharray="6,4"' if s.dashed else ""
            if len(ps) == 1:
                a, b = ps[0]
                lines.append(f'<circle cx="{sx(a):.2f}" cy="{sy(b):.2f}" r="3" fill="{colour}"/>')
            elif ps:
                lines.append(f'<polyline points="{coords}" fill="none" stroke="{colour}" stroke-width="1.5"{dash}/>')
            ly = top + 14 + 16 * k
            lines.append(f'<line x1="{left + pw - 150}" y1="{ly - 4}" x2="{left + pw - 125}" y2="{ly - 4}" stroke="{colour}"{dash}/>')
            lines.append(f'<text x="{left + pw - 120}" y="{ly}">{escape(s.label)}</text>')
        lines.append("</svg>")
        return "\n".join(lines) + "\n"

    def write(self, path) -> Path:
        path = Path(path)
        path.write_text(self.render(), encoding="utf-8")
        return path
