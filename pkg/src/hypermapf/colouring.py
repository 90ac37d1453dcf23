"""Grid colourings that group nearby vertices into (possibly overlapping)
regions, later used to gather agents into hyperedge tails.

Both strategies share the same post-processing: keep the k_init/2 most
populous colours, drop the rest, then repeatedly let the dropped vertices
adopt their neighbours' colours until every free vertex is coloured again.
Vertices reached from several regions end up with multiple colours, which
softens the region borders.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .grid import Cell, GridMap

_SHIFTS = ((0, -1), (0, 1), (-1, 0), (1, 0))  # (dy, dx) of the 4 neighbours


@dataclass(frozen=True)
class Colouring:
    """Per-vertex colour sets as a (num_colours, H, W) boolean mask stack."""

    masks: np.ndarray = field(repr=False)

    def __post_init__(self):
        masks = np.asarray(self.masks, dtype=bool)
        masks.flags.writeable = False
        object.__setattr__(self, "masks", masks)

    @property
    def num_colours(self) -> int:
        return self.masks.shape[0]

    def colours_at(self, cell: Cell) -> tuple[int, ...]:
        x, y = cell
        return tuple(int(c) for c in np.nonzero(self.masks[:, y, x])[0])

    def populations(self) -> np.ndarray:
        return self.masks.sum(axis=(1, 2))

    def covers(self, grid: GridMap) -> bool:
        free = ~grid.obstacles
        return bool(self.masks.any(axis=0)[free].all())

    def agent_matrix(self, config) -> np.ndarray:
        """(n_agents, num_colours) membership of each agent's cell."""
        return np.stack([self.masks[:, y, x] for x, y in config])


def dump_colouring(colouring: Colouring, grid: GridMap) -> str:
    """One free vertex per line: `x y` followed by its colour ids."""
    lines = []
    for y in range(grid.height):
        for x in range(grid.width):
            if grid.obstacles[y, x]:
                continue
            ids = " ".join(str(c) for c in colouring.colours_at((x, y)))
            lines.append(f"{x} {y} {ids}".rstrip())
    return "\n".join(lines) + "\n"


def parse_colouring(text: str, grid: GridMap) -> Colouring:
    entries: dict[Cell, tuple[int, ...]] = {}
    max_colour = -1
    for line in text.splitlines():
        if not line.strip():
            continue
        parts = line.split()
        x, y = int(parts[0]), int(parts[1])
        ids = tuple(int(v) for v in parts[2:])
        entries[(x, y)] = ids
        max_colour = max(max_colour, max(ids, default=-1))
    masks = np.zeros((max_colour + 1, grid.height, grid.width), dtype=bool)
    for (x, y), ids in entries.items():
        for c in ids:
            masks[c, y, x] = True
    return Colouring(masks)


def _apportion(total: int, sizes: list[int]) -> list[int]:
    """Largest-remainder split of `total` seats by size: at least one seat
    per component and never more seats than a component has vertices."""
    if total < len(sizes):
        raise ValueError(f"cannot give {len(sizes)} components >= 1 of {total} seats")
    spare = total - len(sizes)
    quotas = [s / sum(sizes) * spare for s in sizes]
    seats = [1 + int(q) for q in quotas]
    order = sorted(range(len(sizes)),
                   key=lambda i: (-(quotas[i] - int(quotas[i])), i))
    idx = 0
    while sum(seats) < total:
        seats[order[idx % len(sizes)]] += 1
        idx += 1
    # A seat count above the component size cannot be realised; push the
    # excess into components with room (total <= half the free vertices,
    # so room always exists).
    while True:
        over = [i for i in range(len(sizes)) if seats[i] > sizes[i]]
        if not over:
            return seats
        room = max((i for i in range(len(sizes)) if seats[i] < sizes[i]),
                   key=lambda i: (sizes[i] - seats[i], -i))
        seats[over[0]] -= 1
        seats[room] += 1


def _component_bfs(grid: GridMap, sources: list[Cell]) -> np.ndarray:
    dist = np.full((grid.height, grid.width), np.inf)
    queue = deque()
    for cell in sources:
        dist[cell[1], cell[0]] = 0.0
        queue.append(cell)
    while queue:
        cur = queue.popleft()
        base = dist[cur[1], cur[0]]
        for nxt in grid.neighbors(cur):
            if np.isinf(dist[nxt[1], nxt[0]]):
                dist[nxt[1], nxt[0]] = base + 1.0
                queue.append(nxt)
    return dist


def _soft_borders(masks: np.ndarray, free: np.ndarray) -> np.ndarray:
    """Grow surviving colours into uncoloured free vertices by neighbour
    adoption. Only the initially uncoloured vertices ever gain colours, and
    the (vertex, colour) set grows monotonically until all free vertices
    are covered."""
    uncoloured_init = free & ~masks.any(axis=0)
    passes = 0
    while (free & ~masks.any(axis=0)).any():
        passes += 1
        if passes > masks.shape[1] * masks.shape[2] + 1:
            raise RuntimeError("soft-border pass failed to converge; "
                               "a free component has no surviving colour")
        grown = np.zeros_like(masks)
        for dy, dx in _SHIFTS:
            shifted = np.roll(masks, (dy, dx), axis=(1, 2))
            if dy == -1:
                shifted[:, -1, :] = False
            elif dy == 1:
                shifted[:, 0, :] = False
            if dx == -1:
                shifted[:, :, -1] = False
            elif dx == 1:
                shifted[:, :, 0] = False
            grown |= shifted
        masks = masks | (grown & uncoloured_init & free)
    return masks


def _select_survivors(labels: np.ndarray, valid: np.ndarray, num_labels: int,
                      keep: int) -> list[int]:
    counts = np.bincount(labels[valid], minlength=num_labels)
    order = sorted(range(num_labels), key=lambda c: (-counts[c], c))
    return sorted(order[:keep])


def _check_preconditions(grid: GridMap, k_init: int) -> list[list[Cell]]:
    if k_init % 2 != 0 or k_init < 2:
        raise ValueError("k_init must be even and >= 2")
    if k_init > grid.num_free:
        raise ValueError(f"k_init={k_init} exceeds {grid.num_free} free vertices")
    comps = grid.components()
    if len(comps) > k_init // 2:
        raise ValueError("more free components than surviving colours; "
                         "raise k_init")
    return comps


def default_colour_budget(grid: GridMap) -> int:
    """Initial colour count so that the surviving half is ~10% of the free
    vertices."""
    return 2 * max(1, round(0.1 * grid.num_free))


def lloyd_colouring(grid: GridMap, k_init: int, iters: int = 5,
                    seed: int = 0) -> Colouring:
    """Balanced region colouring via Lloyd iterations on the grid graph.

    Seeds are assigned per free-space component (seats proportional to
    component size). Each iteration assigns vertices to their nearest seed
    (BFS distance, ties to the lowest colour id) and moves each seed to the
    vertex minimising the summed shortest-path distance within its region.
    The densest half of the colours survives into the soft-border pass.
    """
    comps = _check_preconditions(grid, k_init)
    rng = np.random.default_rng(seed)
    survivors_per_comp = _apportion(k_init // 2, [len(c) for c in comps])

    mask_list: list[np.ndarray] = []
    for comp, keep in zip(comps, survivors_per_comp):
        comp = sorted(comp, key=lambda c: (c[1], c[0]))
        num_seeds = min(2 * keep, len(comp))
        picks = rng.choice(len(comp), size=num_seeds, replace=False)
        seeds = [comp[i] for i in sorted(int(p) for p in picks)]

        labels = {}
        for _ in range(max(1, iters)):
            fields = np.stack([_component_bfs(grid, [s]) for s in seeds])
            labels = {cell: int(np.argmin(fields[:, cell[1], cell[0]])) for cell in comp}
            new_seeds = list(seeds)
            for c in range(num_seeds):
                region = [cell for cell in comp if labels[cell] == c]
                if not region:
                    continue
                region_grid = _region_subgrid(grid, region)
                totals = []
                for cell in region:
                    dist = _component_bfs(region_grid, [cell])
                    totals.append(sum(dist[y, x] for x, y in region))
                new_seeds[c] = region[int(np.argmin(totals))]
            if new_seeds == seeds:
                break
            seeds = new_seeds

        label_arr = np.full((grid.height, grid.width), -1, dtype=int)
        for cell, c in labels.items():
            label_arr[cell[1], cell[0]] = c
        survivors = _select_survivors(label_arr, label_arr >= 0, num_seeds, keep)
        for c in survivors:
            mask_list.append(label_arr == c)

    masks = _soft_borders(np.stack(mask_list), ~grid.obstacles)
    return Colouring(masks)


def _region_subgrid(grid: GridMap, region: list[Cell]) -> GridMap:
    obs = np.ones((grid.height, grid.width), dtype=bool)
    for x, y in region:
        obs[y, x] = False
    return GridMap(grid.width, grid.height, obs)


def kmeans_colouring(grid: GridMap, k_init: int, iters: int = 30,
                     seed: int = 0) -> Colouring:
    """Diffusion-based colouring: seed k_init one-hot colour vectors at
    random vertices, average them over neighbourhoods for `iters` rounds
    (L1-renormalised), cluster the vectors with k-means, then apply the
    same discard-half and soft-border post-processing as the Lloyd variant.

    Vertices the diffusion never reaches (isolated or parity-starved) fall
    back to their nearest seed's colour before clustering.
    """
    comps = _check_preconditions(grid, k_init)
    rng = np.random.default_rng(seed)
    survivors_per_comp = _apportion(k_init // 2, [len(c) for c in comps])

    mask_list: list[np.ndarray] = []
    for comp, keep in zip(comps, survivors_per_comp):
        comp = sorted(comp, key=lambda c: (c[1], c[0]))
        num_seeds = min(2 * keep, len(comp))
        picks = rng.choice(len(comp), size=num_seeds, replace=False)
        seeds = [comp[i] for i in sorted(int(p) for p in picks)]

        comp_mask = np.zeros((grid.height, grid.width), dtype=bool)
        for x, y in comp:
            comp_mask[y, x] = True
        vectors = _diffuse(comp_mask, seeds, num_seeds, iters)
        _fill_unreached(vectors, comp_mask, grid, seeds)

        rows = np.stack([vectors[y, x] for x, y in comp])
        centres = np.stack([vectors[y, x] for x, y in seeds])
        labels = _kmeans(rows, centres, iters)

        label_arr = np.full((grid.height, grid.width), -1, dtype=int)
        for cell, c in zip(comp, labels):
            label_arr[cell[1], cell[0]] = int(c)
        survivors = _select_survivors(label_arr, label_arr >= 0, num_seeds, keep)
        for c in survivors:
            mask_list.append(label_arr == c)

    masks = _soft_borders(np.stack(mask_list), ~grid.obstacles)
    return Colouring(masks)


def _diffuse(comp_mask: np.ndarray, seeds: list[Cell], num_seeds: int,
             iters: int) -> np.ndarray:
    h, w = comp_mask.shape
    vectors = np.zeros((h, w, num_seeds))
    for c, (x, y) in enumerate(seeds):
        vectors[y, x, c] = 1.0
    for _ in range(iters):
        acc = np.zeros_like(vectors)
        for dy, dx in _SHIFTS:
            shifted = np.roll(vectors, (dy, dx), axis=(0, 1))
            if dy == -1:
                shifted[-1, :, :] = 0.0
            elif dy == 1:
                shifted[0, :, :] = 0.0
            if dx == -1:
                shifted[:, -1, :] = 0.0
            elif dx == 1:
                shifted[:, 0, :] = 0.0
            acc += shifted
        acc[~comp_mask] = 0.0
        norms = acc.sum(axis=2, keepdims=True)
        nonzero = norms[..., 0] > 0
        acc[nonzero] /= norms[nonzero]
        vectors = acc
    return vectors


def _fill_unreached(vectors: np.ndarray, comp_mask: np.ndarray, grid: GridMap,
                    seeds: list[Cell]) -> None:
    empty = comp_mask & (vectors.sum(axis=2) == 0)
    if not empty.any():
        return
    owner = np.full(comp_mask.shape, -1, dtype=int)
    queue = deque()
    for c, cell in enumerate(seeds):
        owner[cell[1], cell[0]] = c
        queue.append(cell)
    while queue:
        cur = queue.popleft()
        for nxt in grid.neighbors(cur):
            if comp_mask[nxt[1], nxt[0]] and owner[nxt[1], nxt[0]] < 0:
                owner[nxt[1], nxt[0]] = owner[cur[1], cur[0]]
                queue.append(nxt)
    ys, xs = np.nonzero(empty)
    for x, y in zip(xs, ys):
        vectors[y, x, owner[y, x]] = 1.0


def _kmeans(rows: np.ndarray, centres: np.ndarray, iters: int) -> np.ndarray:
    """Plain k-means with deterministic ties and empty-cluster repair."""
    k = centres.shape[0]
    labels = np.zeros(len(rows), dtype=int)
    for _ in range(max(1, iters)):
        d2 = ((rows[:, None, :] - centres[None, :, :]) ** 2).sum(axis=2)
        labels = np.argmin(d2, axis=1)
        for c in range(k):
            members = labels == c
            if not members.any():
                # Steal the vertex farthest from its own centre, but never
                # empty another cluster doing so.
                gaps = d2[np.arange(len(rows)), labels]
                counts = np.bincount(labels, minlength=k)
                gaps[counts[labels] <= 1] = -1.0
                labels[int(np.argmax(gaps))] = c
                members = labels == c
            centres[c] = rows[members].mean(axis=0)
    return labels
