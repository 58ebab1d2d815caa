"""SVG rendering of team paths over the sampling lattice."""

from __future__ import annotations

from xml.sax.saxutils import escape

from .instance import ProblemInstance
from .solution import TeamSolution

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf")


def render_svg(instance: ProblemInstance, solution: TeamSolution, title: str = "",
               width: int = 480, margin: int = 30) -> str:
    pos = instance.positions
    lo = pos.min(axis=0)
    hi = pos.max(axis=0)
    span = max(float((hi - lo).max()), 1e-9)
    scale = (width - 2 * margin) / span
    height = int(round((hi[1] - lo[1]) * scale)) + 2 * margin
    cap_h = 40

    def xy(v):
        x, y = pos[v]
        # flip y so the lattice reads bottom-up
        return margin + (x - lo[0]) * scale, height - margin - (y - lo[1]) * scale

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height + cap_h}" '
        f'viewBox="0 0 {width} {height + cap_h}">',
        f'<rect width="{width}" height="{height + cap_h}" fill="white"/>',
    ]
    visited = {v for p in solution.paths for v in p[1:-1]}
    for v in instance.sampling_ids:
        x, y = xy(v)
        fill = "black" if v in visited else "#bbbbbb"
        out.append(f'<circle class="vertex" data-id="{v}" cx="{x:.2f}" cy="{y:.2f}" r="3" fill="{fill}"/>')
    for k, p in enumerate(solution.paths):
        if len(p) <= 2:
            continue
        pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in map(xy, p))
        ids = " ".join(str(v) for v in p)
        colour = PALETTE[k % len(PALETTE)]
        out.append(f'<polyline class="path" data-robot="{k}" data-path="{ids}" points="{pts}" '
                   f'fill="none" stroke="{colour}" stroke-width="2"/>')
    sx, sy = xy(instance.start_id)
    out.append(f'<rect class="depot start" data-id="{instance.start_id}" x="{sx - 6:.2f}" y="{sy - 6:.2f}" '
               f'width="12" height="12" fill="none" stroke="green" stroke-width="2"/>')
    fx, fy = xy(instance.finish_id)
    out.append(f'<circle class="depot finish" data-id="{instance.finish_id}" cx="{fx:.2f}" cy="{fy:.2f}" r="8" '
               f'fill="none" stroke="red" stroke-width="2"/>')
    caption = f"utility {solution.utility:.3f}"
    t = solution.extra.get("wall_time_s")
    if t is not None:
        caption += f", planning time {t:.4g} s"
    caption += f", {len(solution.paths)} robots"
    if title:
        caption = f"{title}: {caption}"
    out.append(f'<text class="caption" x="{margin}" y="{height + cap_h / 2 + 5:.0f}" '
               f'font-family="sans-serif" font-size="13">{escape(caption)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
