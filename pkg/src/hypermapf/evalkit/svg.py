"""Deterministic SVG rendering of instances, trajectories, colour regions
and attention overlays. Output is byte-stable: fixed float formatting,
sorted iteration, no timestamps."""

from __future__ import annotations

import numpy as np

from ..colouring import Colouring
from ..costs import Trajectory
from ..grid import Instance

_PALETTE = ("#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3",
            "#937860", "#da8bc3", "#8c8c8c", "#ccb974", "#64b5cd")


def _fmt(value: float) -> str:
    return f"{value:.2f}".rstrip("0").rstrip(".")


def render_svg(
    instance: Instance,
    trajectory: Trajectory | None = None,
    colouring: Colouring | None = None,
    attention: np.ndarray | None = None,
    groups: tuple[int, ...] | None = None,
    cell: int = 24,
) -> str:
    """Grid with obstacles, agents (filled circles) and goals (hollow
    circles); optional colour-region overlay, per-agent trajectory paths,
    and attention edges with opacity proportional to the weight."""
    grid = instance.grid
    w, h = grid.width * cell, grid.height * cell
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
        f'viewBox="0 0 {w} {h}">',
        f'<rect width="{w}" height="{h}" fill="#ffffff"/>',
    ]

    if colouring is not None:
        for c in range(colouring.num_colours):
            colour = _PALETTE[c % len(_PALETTE)]
            ys, xs = np.nonzero(colouring.masks[c])
            for x, y in sorted(zip(xs.tolist(), ys.tolist())):
                parts.append(
                    f'<rect x="{x * cell}" y="{y * cell}" width="{cell}" '
                    f'height="{cell}" fill="{colour}" fill-opacity="0.25"/>')

    for y in range(grid.height):
        for x in range(grid.width):
            if grid.obstacles[y, x]:
                parts.append(f'<rect x="{x * cell}" y="{y * cell}" '
                             f'width="{cell}" height="{cell}" fill="#2f2f2f"/>')

    for k in range(grid.width + 1):
        parts.append(f'<line x1="{k * cell}" y1="0" x2="{k * cell}" y2="{h}" '
                     f'stroke="#d0d0d0" stroke-width="1"/>')
    for k in range(grid.height + 1):
        parts.append(f'<line x1="0" y1="{k * cell}" x2="{w}" y2="{k * cell}" '
                     f'stroke="#d0d0d0" stroke-width="1"/>')

    centre = lambda c: ((c[0] + 0.5) * cell, (c[1] + 0.5) * cell)

    if trajectory is not None:
        for i in range(trajectory.num_agents):
            colour = _PALETTE[(groups[i] if groups else i) % len(_PALETTE)]
            points = " ".join(f"{_fmt(centre(cfg[i])[0])},{_fmt(centre(cfg[i])[1])}"
                              for cfg in trajectory.configs)
            parts.append(f'<polyline points="{points}" fill="none" '
                         f'stroke="{colour}" stroke-width="2" stroke-opacity="0.6"/>')

    config = trajectory.configs[-1] if trajectory is not None else instance.starts

    if attention is not None:
        n = len(config)
        for i in range(n):
            for j in range(n):
                if i == j or attention[i, j] <= 0:
                    continue
                (x1, y1), (x2, y2) = centre(config[i]), centre(config[j])
                opacity = min(1.0, float(attention[i, j]))
                parts.append(f'<line x1="{_fmt(x1)}" y1="{_fmt(y1)}" '
                             f'x2="{_fmt(x2)}" y2="{_fmt(y2)}" stroke="#222222" '
                             f'stroke-width="2" stroke-opacity="{_fmt(opacity)}"/>')

    radius = cell * 0.32
    for i, cellpos in enumerate(config):
        colour = _PALETTE[(groups[i] if groups else i) % len(_PALETTE)]
        x, y = centre(cellpos)
        parts.append(f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="{_fmt(radius)}" '
                     f'fill="{colour}"/>')
    for i, goal in enumerate(instance.goals):
        colour = _PALETTE[(groups[i] if groups else i) % len(_PALETTE)]
        x, y = centre(goal)
        parts.append(f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="{_fmt(radius)}" '
                     f'fill="none" stroke="{colour}" stroke-width="2"/>')

    parts.append("</svg>")
    return "\n".join(parts) + "\n"
