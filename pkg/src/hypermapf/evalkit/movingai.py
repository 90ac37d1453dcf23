"""MovingAI benchmark ingestion: `.map` grids and `.scen` agent lists.

Map cells in {@, O, T, W} are obstacles; everything else is free. Scenario
rows are tab-separated `bucket map width height sx sy gx gy optimal` with
x as the column and y as the row, one agent per row.
"""

from __future__ import annotations

from ..errors import ParseError
from ..grid import GridMap, Instance

_OBSTACLES = set("@OTW")


def parse_map(text: str) -> GridMap:
    lines = text.splitlines()
    if len(lines) < 4:
        raise ParseError("map file needs a 4-line header", 1)
    if not lines[0].startswith("type"):
        raise ParseError("expected 'type ...' header", 1)
    try:
        height = int(lines[1].split()[1])
        width = int(lines[2].split()[1])
    except (IndexError, ValueError):
        raise ParseError("malformed height/width header", 2) from None
    if lines[3].strip() != "map":
        raise ParseError("expected 'map' separator", 4)
    rows = lines[4:4 + height]
    if len(rows) != height:
        raise ParseError(f"expected {height} map rows", 5)
    grid_rows = []
    for i, row in enumerate(rows):
        if len(row) != width:
            raise ParseError(f"row has {len(row)} cells, expected {width}", 5 + i)
        grid_rows.append("".join("@" if c in _OBSTACLES else "." for c in row))
    return GridMap.from_rows(grid_rows)


def parse_scen(text: str) -> list[tuple[int, int, int, int]]:
    """Start/goal cells per scenario row: (sx, sy, gx, gy)."""
    lines = text.splitlines()
    if not lines or not lines[0].startswith("version"):
        raise ParseError("expected 'version ...' header", 1)
    rows = []
    for i, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) == 1:
            parts = line.split()
        if len(parts) < 8:
            raise ParseError("expected at least 8 tab-separated fields", i)
        try:
            sx, sy, gx, gy = (int(v) for v in parts[4:8])
        except ValueError:
            raise ParseError("non-integer coordinates", i) from None
        rows.append((sx, sy, gx, gy))
    return rows


def parse_movingai(map_text: str, scen_text: str,
                   num_agents: int | None = None) -> Instance:
    """Build an instance from the first `num_agents` scenario rows (all
    rows when omitted)."""
    grid = parse_map(map_text)
    rows = parse_scen(scen_text)
    if num_agents is not None:
        if num_agents < 1 or num_agents > len(rows):
            raise ValueError(f"scenario has {len(rows)} rows, "
                             f"cannot take {num_agents}")
        rows = rows[:num_agents]
    starts, goals = [], []
    for i, (sx, sy, gx, gy) in enumerate(rows):
        for cell in ((sx, sy), (gx, gy)):
            if not grid.in_bounds(cell):
                raise ParseError(f"cell {cell} outside the map", i + 2)
            if not grid.is_free(cell):
                raise ParseError(f"cell {cell} is an obstacle", i + 2)
        starts.append((sx, sy))
        goals.append((gx, gy))
    try:
        return Instance(grid, tuple(starts), tuple(goals))
    except ValueError as exc:
        raise ParseError(f"scenario rows do not form a valid instance: {exc}") from exc


def to_movingai(instance: Instance, map_name: str = "grid.map") -> tuple[str, str]:
    """Serialize an instance back to `.map` and `.scen` texts."""
    grid = instance.grid
    map_lines = ["type octile", f"height {grid.height}", f"width {grid.width}", "map"]
    map_lines.extend(grid.to_rows())
    scen_lines = ["version 1"]
    for (sx, sy), (gx, gy) in zip(instance.starts, instance.goals):
        scen_lines.append("\t".join(str(v) for v in
                                    (0, map_name, grid.width, grid.height,
                                     sx, sy, gx, gy, 0)))
    return "\n".join(map_lines) + "\n", "\n".join(scen_lines) + "\n"
