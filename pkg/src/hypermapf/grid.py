"""Grid world primitives: maps, instances, configurations, shortest paths.

Cells are (x, y) pairs with x the column and y the row; numpy grids are
indexed [y, x]. The five actions are a fixed enumeration so that decoder
outputs and checkpoints agree on ordering.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError

Cell = tuple[int, int]
Configuration = tuple[Cell, ...]

ACTION_NAMES = ("stay", "up", "right", "down", "left")
ACTION_DELTAS: tuple[Cell, ...] = ((0, 0), (0, -1), (1, 0), (0, 1), (-1, 0))
NUM_ACTIONS = len(ACTION_NAMES)


def apply_action(cell: Cell, action: int) -> Cell:
    dx, dy = ACTION_DELTAS[action]
    return (cell[0] + dx, cell[1] + dy)


def action_between(src: Cell, dst: Cell) -> int:
    delta = (dst[0] - src[0], dst[1] - src[1])
    return ACTION_DELTAS.index(delta)


@dataclass(frozen=True, eq=False)
class GridMap:
    """Static obstacle grid. `obstacles[y, x]` is True on blocked cells."""

    width: int
    height: int
    obstacles: np.ndarray = field(repr=False)

    def __eq__(self, other):
        return (isinstance(other, GridMap)
                and self.width == other.width
                and self.height == other.height
                and np.array_equal(self.obstacles, other.obstacles))

    def __hash__(self):
        return hash((self.width, self.height, self.obstacles.tobytes()))

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("map dimensions must be >= 1")
        obs = np.asarray(self.obstacles, dtype=bool)
        if obs.shape != (self.height, self.width):
            raise ValueError(f"obstacle grid shape {obs.shape} != (height, width)")
        if obs.all():
            raise ValueError("map has no free vertex")
        obs.flags.writeable = False
        object.__setattr__(self, "obstacles", obs)

    @staticmethod
    def empty(width: int, height: int) -> "GridMap":
        return GridMap(width, height, np.zeros((height, width), dtype=bool))

    @staticmethod
    def from_rows(rows: list[str]) -> "GridMap":
        """Build from '.'/'@' text rows ('.' free, '@' blocked)."""
        height = len(rows)
        width = len(rows[0])
        if any(len(r) != width for r in rows):
            raise ValueError("ragged map rows")
        obs = np.array([[c == "@" for c in row] for row in rows], dtype=bool)
        return GridMap(width, height, obs)

    def in_bounds(self, cell: Cell) -> bool:
        x, y = cell
        return 0 <= x < self.width and 0 <= y < self.height

    def is_free(self, cell: Cell) -> bool:
        x, y = cell
        return self.in_bounds(cell) and not self.obstacles[y, x]

    def neighbors(self, cell: Cell) -> list[Cell]:
        """Free 4-neighbours of a cell."""
        x, y = cell
        out = []
        for nx, ny in ((x, y - 1), (x + 1, y), (x, y + 1), (x - 1, y)):
            if 0 <= nx < self.width and 0 <= ny < self.height and not self.obstacles[ny, nx]:
                out.append((nx, ny))
        return out

    def free_cells(self) -> list[Cell]:
        ys, xs = np.nonzero(~self.obstacles)
        return [(int(x), int(y)) for x, y in zip(xs, ys)]

    @property
    def num_free(self) -> int:
        return int((~self.obstacles).sum())

    def to_rows(self) -> list[str]:
        return ["".join("@" if self.obstacles[y, x] else "." for x in range(self.width))
                for y in range(self.height)]

    def components(self) -> list[list[Cell]]:
        """Connected components of the free space, in row-major discovery order."""
        seen = np.zeros((self.height, self.width), dtype=bool)
        comps = []
        for y in range(self.height):
            for x in range(self.width):
                if self.obstacles[y, x] or seen[y, x]:
                    continue
                comp = []
                queue = deque([(x, y)])
                seen[y, x] = True
                while queue:
                    cur = queue.popleft()
                    comp.append(cur)
                    for nxt in self.neighbors(cur):
                        if not seen[nxt[1], nxt[0]]:
                            seen[nxt[1], nxt[0]] = True
                            queue.append(nxt)
                comps.append(comp)
        return comps


def bfs_dist(grid: GridMap, target: Cell) -> np.ndarray:
    """Exact 4-connected shortest-path lengths to `target`.

    Returns a float64 field indexed [y, x]; obstacles and unreachable cells
    hold +inf. The target must be a free cell.
    """
    if not grid.is_free(target):
        raise ValueError(f"bfs target {target} is not a free cell")
    dist = np.full((grid.height, grid.width), np.inf)
    dist[target[1], target[0]] = 0.0
    queue = deque([target])
    while queue:
        cur = queue.popleft()
        base = dist[cur[1], cur[0]]
        for nxt in grid.neighbors(cur):
            if np.isinf(dist[nxt[1], nxt[0]]):
                dist[nxt[1], nxt[0]] = base + 1.0
                queue.append(nxt)
    return dist


@dataclass(frozen=True)
class Instance:
    """A MAPF problem: one grid plus per-agent start and goal cells."""

    grid: GridMap
    starts: Configuration
    goals: Configuration

    def __post_init__(self):
        starts = tuple(tuple(c) for c in self.starts)
        goals = tuple(tuple(c) for c in self.goals)
        object.__setattr__(self, "starts", starts)
        object.__setattr__(self, "goals", goals)
        if len(starts) != len(goals) or not starts:
            raise ValueError("need the same, nonzero number of starts and goals")
        if len(set(starts)) != len(starts):
            raise ValueError("starts must be pairwise distinct")
        if len(set(goals)) != len(goals):
            raise ValueError("goals must be pairwise distinct")
        for cell in starts + goals:
            if not self.grid.is_free(cell):
                raise ValueError(f"start/goal {cell} is not a free cell")

    @property
    def num_agents(self) -> int:
        return len(self.starts)

    def goal_distance_fields(self) -> list[np.ndarray]:
        """One bfs_dist field per agent goal (the hot inputs for observations)."""
        return [bfs_dist(self.grid, g) for g in self.goals]


def format_instance(instance: Instance) -> str:
    """Serialize to the text format: `H W n`, H map rows, n `sx sy gx gy` lines."""
    grid = instance.grid
    lines = [f"{grid.height} {grid.width} {instance.num_agents}"]
    lines.extend(grid.to_rows())
    for (sx, sy), (gx, gy) in zip(instance.starts, instance.goals):
        lines.append(f"{sx} {sy} {gx} {gy}")
    return "\n".join(lines) + "\n"


def parse_instance(text: str) -> Instance:
    lines = text.splitlines()
    if not lines:
        raise ParseError("empty instance text", 1)
    head = lines[0].split()
    if len(head) != 3:
        raise ParseError("expected 'H W n' header", 1)
    try:
        height, width, n = (int(v) for v in head)
    except ValueError:
        raise ParseError("non-integer header fields", 1) from None
    if len(lines) < 1 + height + n:
        raise ParseError(f"expected {1 + height + n} lines, got {len(lines)}")
    rows = lines[1:1 + height]
    for i, row in enumerate(rows):
        if len(row) != width or any(c not in ".@" for c in row):
            raise ParseError("map row must be W characters of '.' or '@'", 2 + i)
    grid = GridMap.from_rows(rows)
    starts, goals = [], []
    for i in range(n):
        lineno = 1 + height + i + 1
        parts = lines[1 + height + i].split()
        if len(parts) != 4:
            raise ParseError("expected 'sx sy gx gy'", lineno)
        try:
            sx, sy, gx, gy = (int(v) for v in parts)
        except ValueError:
            raise ParseError("non-integer agent coordinates", lineno) from None
        for cell in ((sx, sy), (gx, gy)):
            if not grid.in_bounds(cell):
                raise ParseError(f"cell {cell} out of bounds", lineno)
        starts.append((sx, sy))
        goals.append((gx, gy))
    return Instance(grid, tuple(starts), tuple(goals))
