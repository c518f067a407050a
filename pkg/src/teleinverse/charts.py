"""Static SVG bar charts for 4x4 process-matrix parts.

Hand-rolled SVG keeps the output byte-deterministic: fixed canvas, fixed
axis from -1 to 1, fixed number formatting, no library-injected ids or
timestamps.  Each chart contains exactly 16 bars (one per matrix entry,
row-major, grouped by row), with heights clipped to the axis range.
"""

from __future__ import annotations

import numpy as np

_WIDTH = 560
_HEIGHT = 340
_MARGIN_LEFT = 52
_MARGIN_RIGHT = 16
_MARGIN_TOP = 40
_MARGIN_BOTTOM = 48
_GROUP_GAP = 14
_LABELS = ("00", "01", "10", "11")


def _fmt(value: float) -> str:
    return f"{value:.2f}"


def chi_bar_chart(part: np.ndarray, title: str, color: str) -> str:
    """SVG bar chart of a real 4x4 matrix part on a fixed [-1, 1] axis.

    Bars are row-major and grouped by row; values outside [-1, 1] are
    clipped to the axis.
    """
    part = np.asarray(part, dtype=float)
    if part.shape != (4, 4):
        raise ValueError("chart expects a 4x4 real matrix")
    plot_w = _WIDTH - _MARGIN_LEFT - _MARGIN_RIGHT
    plot_h = _HEIGHT - _MARGIN_TOP - _MARGIN_BOTTOM
    bar_w = (plot_w - 3 * _GROUP_GAP) / 16.0
    y_zero = _MARGIN_TOP + plot_h / 2.0
    y_scale = plot_h / 2.0

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<rect x="0" y="0" width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        f'<text x="{_fmt(_WIDTH / 2)}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="15">{title}</text>',
    ]
    for tick in (-1.0, -0.5, 0.0, 0.5, 1.0):
        y = y_zero - tick * y_scale
        out.append(
            f'<line x1="{_MARGIN_LEFT}" y1="{_fmt(y)}" x2="{_WIDTH - _MARGIN_RIGHT}" '
            f'y2="{_fmt(y)}" stroke="#cccccc" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{_MARGIN_LEFT - 6}" y="{_fmt(y + 4)}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{_fmt(tick)}</text>'
        )
    for row in range(4):
        group_x = _MARGIN_LEFT + row * (4 * bar_w + _GROUP_GAP)
        for col in range(4):
            value = min(max(float(part[row, col]), -1.0), 1.0)
            x = group_x + col * bar_w
            top = y_zero - max(value, 0.0) * y_scale
            height = abs(value) * y_scale
            out.append(
                f'<rect class="bar" x="{_fmt(x + 1)}" y="{_fmt(top)}" '
                f'width="{_fmt(bar_w - 2)}" height="{_fmt(height)}" '
                f'fill="{color}" stroke="#333333" stroke-width="0.5"/>'
            )
        out.append(
            f'<text x="{_fmt(group_x + 2 * bar_w)}" y="{_HEIGHT - 24}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12">{_LABELS[row]}</text>'
        )
    out.append(
        f'<text x="{_fmt(_MARGIN_LEFT + plot_w / 2)}" y="{_HEIGHT - 6}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="11">row label: input index; '
        f"bars within a group: columns 00, 01, 10, 11</text>"
    )
    out.append(
        f'<line x1="{_MARGIN_LEFT}" y1="{_fmt(y_zero)}" x2="{_WIDTH - _MARGIN_RIGHT}" '
        f'y2="{_fmt(y_zero)}" stroke="#333333" stroke-width="1"/>'
    )
    out.append("</svg>")
    return "\n".join(out) + "\n"
