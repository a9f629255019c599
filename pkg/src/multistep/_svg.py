"""Self-contained SVG renderings: plane heatmaps and critical-difference
diagrams.  Hand-generated markup, no plotting dependency."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

from .evaluation import Plane, RankTable

_EXISTING_COLOUR = "#1f4e9c"
_NOVEL_COLOUR = "#1d7a34"
_CLIQUE_COLOUR = "#c03030"


def _cell_colour(value: float, lo: float, hi: float) -> str:
    """Blue (low) through white to red (high)."""
    if hi <= lo:
        t = 0.5
    else:
        t = (value - lo) / (hi - lo)
    blue = (49, 99, 206)
    white = (247, 247, 247)
    red = (205, 62, 62)
    if t <= 0.5:
        a, b, u = blue, white, t * 2.0
    else:
        a, b, u = white, red, (t - 0.5) * 2.0
    rgb = tuple(round(ca + (cb - ca) * u) for ca, cb in zip(a, b))
    return f"rgb({rgb[0]},{rgb[1]},{rgb[2]})"


def heatmap_svg(plane: Plane, title: str) -> str:
    """Render one plane region: rows are base percentages, columns are
    rectifier percentages; known-strategy cells get a highlighted
    outline."""
    m = len(plane.percents)
    cell_w, cell_h = 96, 52
    left, top = 90, 70
    width = left + m * cell_w + 20
    height = top + m * cell_h + 30
    lo, hi = float(plane.values.min()), float(plane.values.max())

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'font-family="sans-serif" font-size="12">',
        f'<text x="{width / 2:.0f}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>',
        f'<text x="{left + m * cell_w / 2:.0f}" y="44" text-anchor="middle">rectifier % of horizon</text>',
        f'<text x="18" y="{top + m * cell_h / 2:.0f}" text-anchor="middle" '
        f'transform="rotate(-90 18 {top + m * cell_h / 2:.0f})">base % of horizon</text>',
    ]
    for j, pct in enumerate(plane.percents):
        x = left + j * cell_w + cell_w / 2
        parts.append(f'<text x="{x:.0f}" y="{top - 6}" text-anchor="middle">{pct:.4g}</text>')
    for i, pct in enumerate(plane.percents):
        y = top + i * cell_h + cell_h / 2 + 4
        parts.append(f'<text x="{left - 8}" y="{y:.0f}" text-anchor="end">{pct:.4g}</text>')
    for i in range(m):
        for j in range(m):
            x, y = left + j * cell_w, top + i * cell_h
            colour = _cell_colour(float(plane.values[i, j]), lo, hi)
            parts.append(
                f'<rect x="{x}" y="{y}" width="{cell_w}" height="{cell_h}" '
                f'fill="{colour}" stroke="#999" stroke-width="1"/>'
            )
            if plane.existing[i, j]:
                parts.append(
                    f'<rect x="{x + 2}" y="{y + 2}" width="{cell_w - 4}" height="{cell_h - 4}" '
                    f'fill="none" stroke="{_CLIQUE_COLOUR}" stroke-width="2.5"/>'
                )
            label = f"{plane.values[i, j]:.3g}"
            if plane.stderr is not None:
                label += f" ±{plane.stderr[i, j]:.2g}"
            parts.append(
                f'<text x="{x + cell_w / 2:.0f}" y="{y + cell_h / 2 + 4:.0f}" '
                f'text-anchor="middle">{escape(label)}</text>'
            )
    parts.append("</svg>")
    return "\n".join(parts)


def cd_diagram_svg(
    table: RankTable, cd: float, existing_ids: set[str], title: str
) -> str:
    """Critical-difference diagram: strategies on a common average-rank
    axis (lower is better), bars joining groups whose spread is within
    one critical difference.  Known strategies are coloured differently
    from novel ones."""
    order = np.argsort(table.avg_rank, kind="stable")
    names = [table.strategies[i] for i in order]
    ranks = [float(table.avg_rank[i]) for i in order]
    k = len(names)

    lo = math.floor(min(ranks))
    hi = math.ceil(max(ranks))
    if hi == lo:
        hi = lo + 1
    axis_left, axis_right = 180, 660
    axis_y = 60

    def x_of(rank_value: float) -> float:
        return axis_left + (rank_value - lo) / (hi - lo) * (axis_right - axis_left)

    # cliques as index ranges over the sorted order
    groups = []
    prev_end = -1
    for i in range(k):
        end = i
        while end + 1 < k and ranks[end + 1] - ranks[i] <= cd:
            end += 1
        if end > prev_end and end > i:
            groups.append((i, end))
            prev_end = end

    n_left = (k + 1) // 2
    row_h = 18
    clique_h = 8 + 10 * max(1, len(groups))
    label_top = axis_y + clique_h + 16
    height = label_top + n_left * row_h + 24
    width = axis_right + 200

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'font-family="sans-serif" font-size="12">',
        f'<text x="{(axis_left + axis_right) / 2:.0f}" y="20" text-anchor="middle" '
        f'font-size="15">{escape(title)}</text>',
        f'<text x="{(axis_left + axis_right) / 2:.0f}" y="38" text-anchor="middle" '
        f'font-size="11">average rank (lower is better), CD = {cd:.3f}</text>',
        f'<line x1="{axis_left}" y1="{axis_y}" x2="{axis_right}" y2="{axis_y}" '
        f'stroke="black" stroke-width="1.5"/>',
    ]
    for tick in range(lo, hi + 1):
        x = x_of(tick)
        parts.append(f'<line x1="{x:.1f}" y1="{axis_y - 5}" x2="{x:.1f}" y2="{axis_y + 5}" stroke="black"/>')
        parts.append(f'<text x="{x:.1f}" y="{axis_y - 10}" text-anchor="middle">{tick}</text>')

    for g, (start, end) in enumerate(groups):
        y = axis_y + 8 + g * 10
        parts.append(
            f'<line x1="{x_of(ranks[start]) - 3:.1f}" y1="{y}" x2="{x_of(ranks[end]) + 3:.1f}" y2="{y}" '
            f'stroke="{_CLIQUE_COLOUR}" stroke-width="4" stroke-linecap="round"/>'
        )

    for i, (name, rank_value) in enumerate(zip(names, ranks)):
        on_left = i < n_left
        row = i if on_left else k - 1 - i
        label_y = label_top + row * row_h
        label_x = axis_left - 12 if on_left else axis_right + 12
        anchor = "end" if on_left else "start"
        colour = _EXISTING_COLOUR if name in existing_ids else _NOVEL_COLOUR
        x = x_of(rank_value)
        parts.append(
            f'<path d="M {x:.1f} {axis_y} V {label_y - 4} H {label_x + (6 if on_left else -6):.1f}" '
            f'fill="none" stroke="{colour}" stroke-width="1.2"/>'
        )
        parts.append(
            f'<text x="{label_x}" y="{label_y}" text-anchor="{anchor}" fill="{colour}">'
            f"{escape(name)} ({rank_value:.2f})</text>"
        )
    parts.append("</svg>")
    return "\n".join(parts)
