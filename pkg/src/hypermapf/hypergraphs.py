"""Directed communication hypergraphs over agents.

Every hyperedge has a singleton head (the deciding agent) and a multi-node
tail (the group influencing it); the head agent is always inserted into its
own tail. Two families of builders are provided: colouring-based grouping
and shortest-distance clique grouping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .colouring import Colouring, default_colour_budget, kmeans_colouring, lloyd_colouring
from .grid import Cell, Configuration, GridMap, bfs_dist


@dataclass(frozen=True)
class Hyperedge:
    tail: tuple[int, ...]  # sorted agent ids, always includes the head
    head: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "tail", tuple(sorted(self.tail)))
        object.__setattr__(self, "head", tuple(sorted(self.head)))


@dataclass(frozen=True)
class DirectedHypergraph:
    num_nodes: int
    edges: tuple[Hyperedge, ...]


def comm_distance(a: Cell, b: Cell, norm: str = "euclidean") -> float:
    dx, dy = abs(a[0] - b[0]), abs(a[1] - b[1])
    if norm == "euclidean":
        return math.hypot(dx, dy)
    if norm == "manhattan":
        return dx + dy
    if norm == "chebyshev":
        return max(dx, dy)
    raise ValueError(f"unknown norm {norm!r}")


def _finish(num_nodes: int, edges: set[tuple[tuple[int, ...], tuple[int, ...]]]) -> DirectedHypergraph:
    ordered = sorted(edges, key=lambda e: (e[1], e[0]))
    return DirectedHypergraph(num_nodes, tuple(Hyperedge(t, h) for t, h in ordered))


def colouring_to_hypergraph(
    colouring: Colouring,
    config: Configuration,
    r_comm: float,
    norm: str = "euclidean",
) -> DirectedHypergraph:
    """For every agent v and colour c: the agents within r_comm of v whose
    cell carries c form the tail of a hyperedge headed by v (v included).
    Identical (tail, head) pairs collapse."""
    n = len(config)
    membership = colouring.agent_matrix(config)  # (n, k)
    edges: set[tuple[tuple[int, ...], tuple[int, ...]]] = set()
    for v in range(n):
        near = np.array([comm_distance(config[u], config[v], norm) <= r_comm
                         for u in range(n)])
        for c in range(colouring.num_colours):
            tail = np.nonzero(near & membership[:, c])[0]
            if tail.size == 0:
                continue
            members = set(int(u) for u in tail)
            members.add(v)
            edges.add((tuple(sorted(members)), (v,)))
    return _finish(n, edges)


def shortest_distance_hypergraph(
    grid: GridMap,
    config: Configuration,
    r_comm: float,
    epsilon: float = 0.0,
    seed: int = 0,
    norm: str = "euclidean",
) -> DirectedHypergraph:
    """Clique-based grouping: for head v, agents u, w communicate when one
    can be encountered while travelling to the other, measured with grid
    shortest-path distances and slack `epsilon`. Greedily sampled cliques of
    that relation become hyperedge tails; sampling repeats until every
    communicating agent is covered, and reruns (up to a bounded number of
    rounds) while fewer than 5 cliques were found.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    n = len(config)
    rng = np.random.default_rng(seed)

    fields: dict[Cell, np.ndarray] = {}
    for cell in config:
        if cell not in fields:
            fields[cell] = bfs_dist(grid, cell)
    d = np.zeros((n, n))
    for i, a in enumerate(config):
        for j, b in enumerate(config):
            d[i, j] = fields[a][b[1], b[0]]

    edges: set[tuple[tuple[int, ...], tuple[int, ...]]] = set()
    for v in range(n):
        comm = [u for u in range(n)
                if u != v and comm_distance(config[u], config[v], norm) <= r_comm]
        if not comm:
            edges.add(((v,), (v,)))
            continue
        linked = {u: set() for u in comm}
        for u in comm:
            for w in comm:
                if u == w:
                    continue
                if d[v, u] + d[u, w] <= max(d[v, u], d[v, w]) + epsilon:
                    linked[u].add(w)
                    linked[w].add(u)
        cliques = _sample_cliques(comm, linked, rng)
        for clique in cliques:
            members = set(clique)
            members.add(v)
            edges.add((tuple(sorted(members)), (v,)))
    return _finish(n, edges)


_MIN_CLIQUES = 5
_MAX_CLIQUE_ROUNDS = 5


def _sample_cliques(comm: list[int], linked: dict[int, set[int]],
                    rng: np.random.Generator) -> list[tuple[int, ...]]:
    cliques: list[tuple[int, ...]] = []
    for _ in range(_MAX_CLIQUE_ROUNDS):
        uncovered = set(comm)
        while uncovered:
            start = int(rng.choice(sorted(uncovered)))
            clique = [start]
            for u in rng.permutation(sorted(set(comm) - {start})):
                u = int(u)
                if all(u in linked[m] for m in clique):
                    clique.append(u)
            cliques.append(tuple(sorted(clique)))
            uncovered -= set(clique)
        if len(cliques) >= _MIN_CLIQUES:
            break
    return cliques


def hyperedge_features(hypergraph: DirectedHypergraph, config: Configuration) -> np.ndarray:
    """Per (hyperedge, tail member) geometry rows, in flattening order:
    (dx, dy, |dx| + |dy|) of the member relative to the hyperedge centre.
    The centre is the head position, or the head centroid for multi-node
    heads."""
    rows = []
    for edge in hypergraph.edges:
        cx = sum(config[h][0] for h in edge.head) / len(edge.head)
        cy = sum(config[h][1] for h in edge.head) / len(edge.head)
        for j in edge.tail:
            dx = config[j][0] - cx
            dy = config[j][1] - cy
            rows.append((dx, dy, abs(dx) + abs(dy)))
    if not rows:
        return np.zeros((0, 3))
    return np.array(rows, dtype=float)


@dataclass(frozen=True)
class FlatHypergraph:
    """Index-array form of a hypergraph batch, the layout layers consume.

    `tail_edge[p]`/`tail_node[p]` enumerate (hyperedge, tail member) pairs;
    `head_edge[q]`/`head_node[q]` enumerate (hyperedge, head member) pairs;
    `tail_geometry` aligns with the tail enumeration.
    """

    num_nodes: int
    num_edges: int
    tail_edge: np.ndarray
    tail_node: np.ndarray
    head_edge: np.ndarray
    head_node: np.ndarray
    tail_geometry: np.ndarray


def flatten_hypergraph(hypergraph: DirectedHypergraph, config: Configuration) -> FlatHypergraph:
    tail_edge, tail_node, head_edge, head_node = [], [], [], []
    for e, edge in enumerate(hypergraph.edges):
        for j in edge.tail:
            tail_edge.append(e)
            tail_node.append(j)
        for i in edge.head:
            head_edge.append(e)
            head_node.append(i)
    return FlatHypergraph(
        num_nodes=hypergraph.num_nodes,
        num_edges=len(hypergraph.edges),
        tail_edge=np.array(tail_edge, dtype=int),
        tail_node=np.array(tail_node, dtype=int),
        head_edge=np.array(head_edge, dtype=int),
        head_node=np.array(head_node, dtype=int),
        tail_geometry=hyperedge_features(hypergraph, config),
    )


@dataclass(frozen=True)
class FlatGraph:
    """Pairwise disk graph with self-loops, for the pairwise-attention
    baseline. Edge p carries a message from `src[p]` to `dst[p]`."""

    num_nodes: int
    src: np.ndarray
    dst: np.ndarray
    geometry: np.ndarray  # (E, 3) offsets of src relative to dst


def build_disk_graph(config: Configuration, r_comm: float,
                     norm: str = "euclidean") -> FlatGraph:
    n = len(config)
    src, dst, geom = [], [], []
    for i in range(n):
        for j in range(n):
            if i != j and comm_distance(config[j], config[i], norm) > r_comm:
                continue
            dx = config[j][0] - config[i][0]
            dy = config[j][1] - config[i][1]
            src.append(j)
            dst.append(i)
            geom.append((dx, dy, abs(dx) + abs(dy)))
    return FlatGraph(n, np.array(src, dtype=int), np.array(dst, dtype=int),
                     np.array(geom, dtype=float))


class HypergraphStrategy:
    """Builds the communication structure a policy consumes each timestep.

    `kind` is one of "lloyd", "kmeans", "distance" or "pairwise";
    `refresh_period` says how many timesteps a built structure stays valid
    during rollouts (distance-based structures are rebuilt every 5 steps,
    the rest every step).
    """

    def __init__(self, kind: str, seed: int = 0, k_init: int | None = None,
                 iters: int | None = None, epsilon: float = 0.0,
                 norm: str = "euclidean"):
        if kind not in ("lloyd", "kmeans", "distance", "pairwise"):
            raise ValueError(f"unknown strategy kind {kind!r}")
        self.kind = kind
        self.seed = seed
        self.k_init = k_init
        self.iters = iters
        self.epsilon = epsilon
        self.norm = norm
        self.refresh_period = 5 if kind == "distance" else 1
        self._colourings: dict[int, Colouring] = {}
        self._builds = 0

    def colouring_for(self, grid: GridMap) -> Colouring:
        key = id(grid)
        if key not in self._colourings:
            k_init = self.k_init or default_colour_budget(grid)
            if self.kind == "lloyd":
                self._colourings[key] = lloyd_colouring(
                    grid, k_init, self.iters or 5, self.seed)
            else:
                self._colourings[key] = kmeans_colouring(
                    grid, k_init, self.iters or 30, self.seed)
        return self._colourings[key]

    def build(self, grid: GridMap, config: Configuration, r_comm: float) -> DirectedHypergraph:
        if self.kind == "pairwise":
            raise ValueError("pairwise strategy has no hypergraph; use build_disk_graph")
        if self.kind == "distance":
            hg = shortest_distance_hypergraph(
                grid, config, r_comm, self.epsilon,
                seed=self.seed + self._builds, norm=self.norm)
            self._builds += 1
            return hg
        return colouring_to_hypergraph(self.colouring_for(grid), config,
                                       r_comm, self.norm)
