"""Joint-move semantics: agents may stay or step to a free 4-adjacent cell,
and no two agents may share a target vertex or swap occupied vertices."""

from __future__ import annotations

from dataclasses import dataclass

from .grid import Cell, Configuration, GridMap


@dataclass(frozen=True)
class Conflict:
    kind: str  # "vertex" | "edge" | "obstacle" | "non-adjacent"
    agents: tuple[int, ...]
    cell: Cell | None = None


def validate_joint_move(grid: GridMap, src: Configuration, dst: Configuration) -> list[Conflict]:
    """Check one joint transition; returns [] when the move is accepted.

    Reported kinds: `obstacle` (target blocked or outside the map),
    `non-adjacent` (step longer than one 4-connected edge), `vertex`
    (two agents share a target cell) and `edge` (a pair swaps cells).
    """
    if len(src) != len(dst):
        raise ValueError(f"configuration sizes differ: {len(src)} vs {len(dst)}")
    conflicts: list[Conflict] = []
    for i, (a, b) in enumerate(zip(src, dst)):
        if not grid.is_free(b):
            conflicts.append(Conflict("obstacle", (i,), b))
        if abs(a[0] - b[0]) + abs(a[1] - b[1]) > 1:
            conflicts.append(Conflict("non-adjacent", (i,), b))
    occupancy: dict[Cell, int] = {}
    for i, b in enumerate(dst):
        if b in occupancy:
            conflicts.append(Conflict("vertex", (occupancy[b], i), b))
        else:
            occupancy[b] = i
    for i in range(len(src)):
        for j in range(i + 1, len(src)):
            if dst[i] == src[j] and dst[j] == src[i] and src[i] != src[j]:
                conflicts.append(Conflict("edge", (i, j)))
    return conflicts


def is_valid_joint_move(grid: GridMap, src: Configuration, dst: Configuration) -> bool:
    return not validate_joint_move(grid, src, dst)
