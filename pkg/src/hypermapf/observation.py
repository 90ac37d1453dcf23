"""Local observation tensors.

Each agent sees a 4 x (2R+1) x (2R+1) window centred on itself:
obstacles, agent occupancy, a goal-direction projection, and a
normalised cost-to-go map. Out-of-map cells count as obstacles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Cell, Configuration, Instance, bfs_dist


@dataclass(frozen=True)
class Observation:
    channels: np.ndarray  # (4, 2R+1, 2R+1) float64
    agent: int


def _line_cells(a: Cell, b: Cell) -> list[Cell]:
    """Integer cells on the straight segment from a to b (Bresenham)."""
    x0, y0 = a
    x1, y1 = b
    dx, dy = abs(x1 - x0), -abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    cells = []
    while True:
        cells.append((x0, y0))
        if (x0, y0) == (x1, y1):
            break
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x0 += sx
        if e2 <= dx:
            err += dx
            y0 += sy
    return cells


def build_observation(
    instance: Instance,
    config: Configuration,
    agent: int,
    r_obs: int,
    dist_field: np.ndarray | None = None,
) -> Observation:
    """Observation for one agent at the given configuration.

    `dist_field` is the bfs_dist field of the agent's goal; pass it in when
    observing many agents on the same instance to avoid recomputation.

    Channel semantics:
      0: obstacle map (out-of-map cells are obstacles)
      1: agent occupancy
      2: goal projection; the goal cell alone if inside the FOV, otherwise
         the straight line towards the goal clipped to the FOV
      3: (dist(v, g) - dist(centre, g)) / (2 r_obs), exactly 1.0 on
         obstacle and unreachable cells, clipped into [-1, 1]
    """
    if not 0 <= agent < instance.num_agents:
        raise ValueError(f"agent index {agent} out of range")
    grid = instance.grid
    if dist_field is None:
        dist_field = bfs_dist(grid, instance.goals[agent])
    cx, cy = config[agent]
    goal = instance.goals[agent]
    side = 2 * r_obs + 1
    channels = np.zeros((4, side, side))

    xs = np.arange(cx - r_obs, cx + r_obs + 1)
    ys = np.arange(cy - r_obs, cy + r_obs + 1)
    in_x = (xs >= 0) & (xs < grid.width)
    in_y = (ys >= 0) & (ys < grid.height)
    inside = np.outer(in_y, in_x)

    channels[0][~inside] = 1.0
    sub = np.ix_(ys[in_y], xs[in_x])
    channels[0][np.ix_(in_y, in_x)] = grid.obstacles[sub].astype(float)

    for px, py in config:
        ox, oy = px - cx + r_obs, py - cy + r_obs
        if 0 <= ox < side and 0 <= oy < side:
            channels[1][oy, ox] = 1.0

    gx, gy = goal
    if abs(gx - cx) <= r_obs and abs(gy - cy) <= r_obs:
        channels[2][gy - cy + r_obs, gx - cx + r_obs] = 1.0
    else:
        for lx, ly in _line_cells((cx, cy), goal):
            ox, oy = lx - cx + r_obs, ly - cy + r_obs
            if (ox, oy) == (r_obs, r_obs):
                continue
            if 0 <= ox < side and 0 <= oy < side:
                channels[2][oy, ox] = 1.0

    centre_dist = dist_field[cy, cx]
    channels[3][:] = 1.0
    window = dist_field[sub]
    reachable = np.isfinite(window)
    target = channels[3][np.ix_(in_y, in_x)]
    target[reachable] = np.clip((window[reachable] - centre_dist) / (2.0 * r_obs),
                                -1.0, 1.0)
    channels[3][np.ix_(in_y, in_x)] = target
    channels[3][channels[0] == 1.0] = 1.0
    return Observation(channels, agent)


def observe_all(
    instance: Instance,
    config: Configuration,
    r_obs: int,
    dist_fields: list[np.ndarray] | None = None,
) -> np.ndarray:
    """Stacked observation tensor (n, 4, 2R+1, 2R+1) for every agent."""
    if dist_fields is None:
        dist_fields = instance.goal_distance_fields()
    return np.stack([
        build_observation(instance, config, i, r_obs, dist_fields[i]).channels
        for i in range(instance.num_agents)
    ])
