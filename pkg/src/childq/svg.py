"""Static SVG growth charts (no plotting library; output is byte-stable)."""

from __future__ import annotations

from xml.sax.saxutils import escape

from .growth import GrowthChart, Trajectory
from .model import AgeGroup

LEVELS = tuple(range(2, 9))
WIDTH, HEIGHT = 720, 440
LEFT, RIGHT, TOP, BOTTOM = 70, 110, 40, 70

_COLOURS = ("#d62728", "#2ca02c", "#1f77b4", "#9467bd", "#ff7f0e", "#8c564b")
_BAND_COLOURS = {"below_low": "#d62728", "mid": "#555555", "above_high": "#1f77b4", None: "#aaaaaa"}


def _f(v: float) -> str:
    return f"{v:.2f}"


def _x(level: float) -> float:
    span = WIDTH - LEFT - RIGHT
    return LEFT + (level - LEVELS[0]) / (LEVELS[-1] - LEVELS[0]) * span


def _y(q: float) -> float:
    span = HEIGHT - TOP - BOTTOM
    return TOP + (1 - q / 100) * span


def pct_label(p: float) -> str:
    return str(int(p)) if float(p).is_integer() else f"{p:g}"


def chart_svg(chart: GrowthChart, trajectory: Trajectory | None = None, title: str | None = None) -> str:
    title = title or f"Test {chart.test_id}: Q percentiles by educational level"
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f"<title>{escape(title)}</title>",
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.2f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
    ]
    # y axis and grid
    for q in range(0, 101, 20):
        y = _f(_y(q))
        out.append(f'<line class="y-grid" x1="{LEFT}" y1="{y}" x2="{WIDTH - RIGHT}" y2="{y}" stroke="#e0e0e0"/>')
        out.append(f'<text class="y-tick" x="{LEFT - 8}" y="{y}" text-anchor="end" dominant-baseline="middle">{q}</text>')
    out.append(
        f'<text x="18" y="{_f((TOP + HEIGHT - BOTTOM) / 2)}" text-anchor="middle" '
        f'transform="rotate(-90 18 {_f((TOP + HEIGHT - BOTTOM) / 2)})">Q (%)</text>'
    )
    # x axis
    base = _f(_y(0))
    out.append(f'<line x1="{LEFT}" y1="{base}" x2="{WIDTH - RIGHT}" y2="{base}" stroke="black"/>')
    for level in LEVELS:
        x = _f(_x(level))
        label = f"G{level} ({AgeGroup(level).label})"
        out.append(
            f'<text class="x-tick" x="{x}" y="{_f(_y(0) + 18)}" text-anchor="middle">{escape(label)}</text>'
        )
    out.append(f'<text x="{_f((LEFT + WIDTH - RIGHT) / 2)}" y="{HEIGHT - 20}" text-anchor="middle">Group (educational level)</text>')

    for i, p in enumerate(chart.percentiles):
        colour = _COLOURS[i % len(_COLOURS)]
        pts = chart.curves[p]
        label = f"P{pct_label(p)}"
        coords = " ".join(f"{_f(_x(lvl))},{_f(_y(q))}" for lvl, q in pts)
        out.append(
            f'<polyline class="percentile" data-percentile="{pct_label(p)}" points="{coords}" '
            f'fill="none" stroke="{colour}" stroke-width="2"><title>{label}</title></polyline>'
        )
        for lvl, q in pts:
            out.append(f'<circle class="curve-point" cx="{_f(_x(lvl))}" cy="{_f(_y(q))}" r="2.5" fill="{colour}"/>')
        if pts:
            lvl, q = pts[-1]
            out.append(
                f'<text class="curve-label" x="{_f(_x(lvl) + 8)}" y="{_f(_y(q))}" '
                f'dominant-baseline="middle" fill="{colour}">{label}</text>'
            )

    if trajectory is not None:
        path = " ".join(f"{_f(_x(pt.group_level))},{_f(_y(pt.q))}" for pt in trajectory.points)
        out.append(f'<polyline class="trajectory" points="{path}" fill="none" stroke="#333333" stroke-dasharray="4 3"/>')
        for pt in trajectory.points:
            band = pt.percentile_band.value if pt.percentile_band is not None else None
            cx, cy = _f(_x(pt.group_level)), _f(_y(pt.q))
            out.append(
                f'<path class="marker" data-acquisition="{pt.acquisition_id}" data-band="{band or "unclassified"}" '
                f'd="M {cx} {_f(_y(pt.q) - 6)} l 6 6 l -6 6 l -6 -6 z" fill="{_BAND_COLOURS[band]}">'
                f"<title>acquisition {pt.acquisition_id}: Q={pt.q:.1f}</title></path>"
            )
            out.append(
                f'<text class="marker-label" x="{_f(_x(pt.group_level) + 8)}" y="{_f(_y(pt.q) - 8)}">A{pt.acquisition_id}</text>'
            )
    out.append("</svg>")
    return "\n".join(out) + "\n"
