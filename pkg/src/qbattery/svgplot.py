"""Tiny hand-rolled SVG plotting: line plots with bands and staircases.

Deliberately dependency-free so plot emission stays deterministic and
byte-identical for identical inputs.
"""

from __future__ import annotations

import math
from pathlib import Path

WIDTH, HEIGHT = 640, 420
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 64, 20, 36, 48

PALETTE = ("#1f6fb4", "#d95f02", "#2b9e4e", "#7a52c7", "#c23b80", "#6b6b6b")


def _nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    for m in (1, 2, 2.5, 5, 10):
        if raw <= m * mag:
            step = m * mag
            break
    start = math.ceil(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-12 * abs(step):
        ticks.append(round(t, 10))
        t += step
    return ticks


def _fmt(x: float) -> str:
    return f"{x:.6g}"


class Canvas:
    """Accumulates SVG elements over one data-coordinate viewport."""

    def __init__(self, xlim, ylim, title="", xlabel="", ylabel=""):
        self.xlim = xlim
        self.ylim = ylim
        self.parts: list[str] = []
        self.title = title
        self.xlabel = xlabel
        self.ylabel = ylabel

    def sx(self, x: float) -> float:
        lo, hi = self.xlim
        frac = (x - lo) / (hi - lo) if hi > lo else 0.5
        return MARGIN_L + frac * (WIDTH - MARGIN_L - MARGIN_R)

    def sy(self, y: float) -> float:
        lo, hi = self.ylim
        frac = (y - lo) / (hi - lo) if hi > lo else 0.5
        return HEIGHT - MARGIN_B - frac * (HEIGHT - MARGIN_T - MARGIN_B)

    def polyline(self, xs, ys, color: str, width: float = 1.6) -> None:
        pts = " ".join(
            f"{self.sx(x):.2f},{self.sy(y):.2f}" for x, y in zip(xs, ys)
        )
        self.parts.append(
            f'<polyline fill="none" stroke="{color}" '
            f'stroke-width="{width}" points="{pts}"/>'
        )

    def band(self, xs, y_lo, y_hi, color: str, opacity: float = 0.18) -> None:
        upper = [f"{self.sx(x):.2f},{self.sy(y):.2f}" for x, y in zip(xs, y_hi)]
        lower = [
            f"{self.sx(x):.2f},{self.sy(y):.2f}"
            for x, y in zip(reversed(list(xs)), reversed(list(y_lo)))
        ]
        pts = " ".join(upper + lower)
        self.parts.append(
            f'<polygon fill="{color}" fill-opacity="{opacity}" '
            f'stroke="none" points="{pts}"/>'
        )

    def staircase(self, edges, levels, color: str, width: float = 1.8) -> None:
        """Piecewise-constant curve: level[k] held on [edges[k], edges[k+1])."""
        xs, ys = [], []
        for k, lvl in enumerate(levels):
            xs.extend([edges[k], edges[k + 1]])
            ys.extend([lvl, lvl])
        self.polyline(xs, ys, color, width)

    def legend(self, labels_colors) -> None:
        x = MARGIN_L + 10
        y = MARGIN_T + 8
        for label, color in labels_colors:
            self.parts.append(
                f'<line x1="{x}" y1="{y}" x2="{x + 22}" y2="{y}" '
                f'stroke="{color}" stroke-width="2"/>'
            )
            self.parts.append(
                f'<text x="{x + 28}" y="{y + 4}" font-size="12" '
                f'fill="#222">{label}</text>'
            )
            y += 18

    def render(self) -> str:
        ax = []
        x0, x1 = MARGIN_L, WIDTH - MARGIN_R
        y0, y1 = HEIGHT - MARGIN_B, MARGIN_T
        ax.append(
            f'<rect x="{x0}" y="{y1}" width="{x1 - x0}" height="{y0 - y1}" '
            'fill="none" stroke="#444" stroke-width="1"/>'
        )
        for t in _nice_ticks(*self.xlim):
            if not self.xlim[0] <= t <= self.xlim[1]:
                continue
            px = self.sx(t)
            ax.append(
                f'<line x1="{px:.2f}" y1="{y0}" x2="{px:.2f}" y2="{y0 + 5}" '
                'stroke="#444"/>'
            )
            ax.append(
                f'<text x="{px:.2f}" y="{y0 + 18}" font-size="11" '
                f'text-anchor="middle" fill="#222">{_fmt(t)}</text>'
            )
        for t in _nice_ticks(*self.ylim):
            if not self.ylim[0] <= t <= self.ylim[1]:
                continue
            py = self.sy(t)
            ax.append(
                f'<line x1="{x0 - 5}" y1="{py:.2f}" x2="{x0}" y2="{py:.2f}" '
                'stroke="#444"/>'
            )
            ax.append(
                f'<text x="{x0 - 8}" y="{py + 4:.2f}" font-size="11" '
                f'text-anchor="end" fill="#222">{_fmt(t)}</text>'
            )
        labels = []
        if self.title:
            labels.append(
                f'<text x="{WIDTH / 2}" y="{MARGIN_T - 12}" font-size="14" '
                f'text-anchor="middle" fill="#111">{self.title}</text>'
            )
        if self.xlabel:
            labels.append(
                f'<text x="{(x0 + x1) / 2}" y="{HEIGHT - 12}" font-size="12" '
                f'text-anchor="middle" fill="#111">{self.xlabel}</text>'
            )
        if self.ylabel:
            labels.append(
                f'<text x="16" y="{(y0 + y1) / 2}" font-size="12" '
                f'text-anchor="middle" fill="#111" '
                f'transform="rotate(-90 16 {(y0 + y1) / 2})">{self.ylabel}</text>'
            )
        body = "\n".join(ax + self.parts + labels)
        return (
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
            f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">\n'
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>\n'
            f"{body}\n</svg>\n"
        )

    def write(self, path: str | Path) -> None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(self.render())


def padded_limits(values, pad: float = 0.05) -> tuple[float, float]:
    vals = list(values)
    lo, hi = min(vals), max(vals)
    if hi == lo:
        lo, hi = lo - 1.0, hi + 1.0
    span = hi - lo
    return lo - pad * span, hi + pad * span
