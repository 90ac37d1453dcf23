"""Instance generators: random scatter, maze carving, and room layouts.

Generation is deterministic per seed. Instances are screened so every
agent's start can reach its goal; joint solvability is only guaranteed
where the exact oracle can check it.
"""

from __future__ import annotations

import numpy as np

from ..grid import GridMap, Instance, bfs_dist


def _random_map(rng: np.random.Generator, width: int, height: int,
                density: float) -> GridMap:
    obstacles = rng.random((height, width)) < density
    if obstacles.all():
        obstacles[height // 2, width // 2] = False
    return GridMap(width, height, obstacles)


def _maze_map(rng: np.random.Generator, width: int, height: int,
              density: float) -> GridMap:
    """Depth-first maze carving on the odd lattice, then random wall
    removal until the obstacle fraction drops to the requested density."""
    obstacles = np.ones((height, width), dtype=bool)
    cells = [(x, y) for x in range(0, width, 2) for y in range(0, height, 2)]
    start = cells[int(rng.integers(len(cells)))]
    stack = [start]
    obstacles[start[1], start[0]] = False
    visited = {start}
    while stack:
        x, y = stack[-1]
        options = []
        for dx, dy in ((0, -2), (2, 0), (0, 2), (-2, 0)):
            nx, ny = x + dx, y + dy
            if 0 <= nx < width and 0 <= ny < height and (nx, ny) not in visited:
                options.append((nx, ny))
        if not options:
            stack.pop()
            continue
        nx, ny = options[int(rng.integers(len(options)))]
        obstacles[(y + ny) // 2, (x + nx) // 2] = False
        obstacles[ny, nx] = False
        visited.add((nx, ny))
        stack.append((nx, ny))
    walls = np.argwhere(obstacles)
    rng.shuffle(walls)
    target = int(density * width * height)
    for y, x in walls:
        if obstacles.sum() <= target:
            break
        obstacles[y, x] = False
    return GridMap(width, height, obstacles)


def _room_map(rng: np.random.Generator, width: int, height: int,
              density: float, room: int = 4) -> GridMap:
    obstacles = np.zeros((height, width), dtype=bool)
    for gy in range(room, height, room + 1):
        obstacles[gy, :] = True
    for gx in range(room, width, room + 1):
        obstacles[:, gx] = True
    # One door per wall segment between adjacent rooms.
    for gy in range(room, height, room + 1):
        for sx in range(0, width, room + 1):
            span = [x for x in range(sx, min(sx + room, width))
                    if not (x % (room + 1) == room)]
            if span:
                obstacles[gy, span[int(rng.integers(len(span)))]] = False
    for gx in range(room, width, room + 1):
        for sy in range(0, height, room + 1):
            span = [y for y in range(sy, min(sy + room, height))
                    if not (y % (room + 1) == room)]
            if span:
                obstacles[span[int(rng.integers(len(span)))], gx] = False
    walls = np.argwhere(obstacles)
    rng.shuffle(walls)
    target = int(density * width * height)
    for y, x in walls:
        if obstacles.sum() <= target:
            break
        obstacles[y, x] = False
    return GridMap(width, height, obstacles)


_BUILDERS = {"random": _random_map, "maze": _maze_map, "room": _room_map}


def generate_instances(
    kind: str,
    count: int,
    size_range: tuple[int, int],
    num_agents: int,
    density: float,
    seed: int = 0,
    max_tries: int = 200,
) -> list[Instance]:
    """Generate `count` screened instances of the requested map family."""
    if kind not in _BUILDERS:
        raise ValueError(f"unknown map kind {kind!r}; pick from {sorted(_BUILDERS)}")
    if not 0.0 <= density < 1.0:
        raise ValueError("density must lie in [0, 1)")
    rng = np.random.default_rng(seed)
    lo, hi = size_range
    instances = []
    for _ in range(count):
        instance = None
        for _attempt in range(max_tries):
            width = int(rng.integers(lo, hi + 1))
            height = int(rng.integers(lo, hi + 1))
            grid = _BUILDERS[kind](rng, width, height, density)
            instance = _place_agents(rng, grid, num_agents)
            if instance is not None:
                break
        if instance is None:
            raise RuntimeError(
                f"failed to place {num_agents} agents after {max_tries} tries "
                f"(kind={kind}, density={density})")
        instances.append(instance)
    return instances


def _place_agents(rng: np.random.Generator, grid: GridMap,
                  num_agents: int) -> Instance | None:
    free = grid.free_cells()
    if len(free) < 2 * num_agents:
        return None
    starts_idx = rng.choice(len(free), size=num_agents, replace=False)
    starts = [free[int(i)] for i in starts_idx]
    goals = []
    taken: set = set()
    for start in starts:
        field = bfs_dist(grid, start)
        reachable = [c for c in free
                     if c not in taken and np.isfinite(field[c[1], c[0]])]
        if not reachable:
            return None
        goal = reachable[int(rng.integers(len(reachable)))]
        goals.append(goal)
        taken.add(goal)
    return Instance(grid, tuple(starts), tuple(goals))
