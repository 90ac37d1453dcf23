"""Attention and influence analyses.

This module quantifies how a trained policy distributes attention and
credit: normalised attention entropy over a run, coefficient of variation
of group attention under agent-count sweeps, exact Shapley values of
agents' influence on a target agent's action log-odds, and a failure-mode
classifier for unsuccessful trajectories.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from itertools import combinations

import numpy as np

from ..costs import Trajectory
from ..errors import ResourceLimitError
from ..grid import NUM_ACTIONS, Cell, GridMap, Instance, apply_action
from ..hypergraphs import HypergraphStrategy
from ..moves import validate_joint_move
from ..network import AttentionRecord, ModelParams, aggregate_attention, policy_forward

# ------------------------------------------------------------------ entropy

def normalised_entropy(row: np.ndarray) -> float:
    """Entropy of an attention row divided by log of its support size.

    1.0 for a uniform row, 0.0 for a one-hot row; requires >= 2 entries
    (the normaliser log|N| vanishes otherwise).
    """
    row = np.asarray(row, dtype=float)
    if row.size < 2:
        raise ValueError("entropy normaliser undefined for support < 2")
    positive = row[row > 0]
    return float(-(positive * np.log(positive)).sum() / math.log(row.size))


@dataclass(frozen=True)
class EntropyReport:
    mean: float
    included_rows: int
    excluded_rows: int  # nodes with < 2 neighbours, skipped and counted


def attention_entropy(records: list[AttentionRecord], layer: int = 0) -> EntropyReport:
    """Mean normalised attention entropy across all nodes of all recorded
    steps, at one layer. A node's neighbourhood is the set of agents that
    can reach it through the layer's structure; nodes with fewer than two
    neighbours are excluded from the mean but counted."""
    values = []
    excluded = 0
    for record in records:
        attn = record.layers[layer]
        matrices, _ = aggregate_attention(AttentionRecord((attn,)))
        matrix = matrices[0]
        neighbours: dict[int, set[int]] = {}
        edges_of_node: dict[int, list[int]] = {}
        for q, e in enumerate(attn.head_edge):
            edges_of_node.setdefault(int(attn.head_node[q]), []).append(int(e))
        tails: dict[int, list[int]] = {}
        for p, e in enumerate(attn.tail_edge):
            tails.setdefault(int(e), []).append(int(attn.tail_node[p]))
        for i, edges in edges_of_node.items():
            neighbours[i] = set()
            for e in edges:
                neighbours[i].update(tails.get(e, []))
        for i, nbrs in sorted(neighbours.items()):
            if len(nbrs) < 2:
                excluded += 1
                continue
            values.append(normalised_entropy(matrix[i, sorted(nbrs)]))
    mean = float(np.mean(values)) if values else float("nan")
    return EntropyReport(mean, len(values), excluded)


# ---------------------------------------------------------------- scenarios

@dataclass(frozen=True)
class ScenarioSpec:
    """A hand-crafted analysis instance with grouped agents.

    Agents are ordered; sweeps build sub-instances from the first k agents.
    The shipped fixtures are geometric reconstructions of the published
    scenarios, not the originals.
    """

    name: str
    grid: GridMap
    starts: tuple[Cell, ...]
    goals: tuple[Cell, ...]
    groups: tuple[int, ...]
    target: int
    initial_count: int

    def __post_init__(self):
        if len(self.groups) != len(self.starts):
            raise ValueError("group labels must cover every agent")

    def instance(self, num_agents: int | None = None) -> Instance:
        k = len(self.starts) if num_agents is None else num_agents
        return Instance(self.grid, self.starts[:k], self.goals[:k])

    def flipped(self) -> "ScenarioSpec":
        """The horizontally mirrored scenario (x -> width-1-x)."""
        w = self.grid.width
        obstacles = self.grid.obstacles[:, ::-1].copy()
        flip = lambda c: (w - 1 - c[0], c[1])
        return ScenarioSpec(self.name + "-flipped",
                            GridMap(w, self.grid.height, obstacles),
                            tuple(flip(c) for c in self.starts),
                            tuple(flip(c) for c in self.goals),
                            self.groups, self.target, self.initial_count)


def load_scenario(name: str) -> ScenarioSpec:
    """Load a packaged scenario fixture ("scenario1" or "scenario2")."""
    path = resources.files("hypermapf.evalkit").joinpath(f"fixtures/{name}.json")
    payload = json.loads(path.read_text())
    grid = GridMap.from_rows(payload["map"])
    agents = payload["agents"]
    return ScenarioSpec(
        name=payload["name"],
        grid=grid,
        starts=tuple(tuple(a["start"]) for a in agents),
        goals=tuple(tuple(a["goal"]) for a in agents),
        groups=tuple(a["group"] for a in agents),
        target=payload["target"],
        initial_count=payload["initial_count"],
    )


def group_attention(params: ModelParams, spec: ScenarioSpec,
                    strategy: HypergraphStrategy, num_agents: int
                    ) -> dict[str, dict[int, float]]:
    """Target-agent attention mass per group, first layer and layer mean."""
    instance = spec.instance(num_agents)
    _, record = policy_forward(params, instance, instance.starts, strategy)
    matrices, _ = aggregate_attention(record)
    out = {}
    for key, mats in (("first_layer", matrices[:1]), ("layer_mean", matrices)):
        rows = np.mean([m[spec.target] for m in mats], axis=0)
        sums: dict[int, float] = {}
        for j in range(num_agents):
            sums[spec.groups[j]] = sums.get(spec.groups[j], 0.0) + float(rows[j])
        out[key] = sums
    return out


def scenario_cv(params: ModelParams, spec: ScenarioSpec,
                strategy: HypergraphStrategy) -> dict[str, dict[int, float]]:
    """Coefficient of variation (sample std / mean, in percent) of each
    group's attention mass as agents are added one by one, from the
    scenario's initial count up to the full roster."""
    sweeps: dict[str, dict[int, list[float]]] = {"first_layer": {}, "layer_mean": {}}
    for k in range(spec.initial_count, len(spec.starts) + 1):
        shares = group_attention(params, spec, strategy, k)
        for key in sweeps:
            for group, value in shares[key].items():
                sweeps[key].setdefault(group, []).append(value)
    out: dict[str, dict[int, float]] = {}
    for key, groups in sweeps.items():
        out[key] = {g: coefficient_of_variation(np.array(vals))
                    for g, vals in sorted(groups.items())}
    return out


def coefficient_of_variation(values: np.ndarray) -> float:
    """Sample standard deviation over mean, as a percentage."""
    if len(values) < 2:
        return 0.0
    mean = values.mean()
    if mean == 0:
        return float("inf")
    return float(values.std(ddof=1) / mean * 100.0)


# ------------------------------------------------------------------ Shapley

_SHAPLEY_MAX_COALITION = 6


@dataclass(frozen=True)
class ShapleyReport:
    agents: tuple[int, ...]
    values: dict[int, float]       # mean absolute Shapley value per agent
    percentages: dict[int, float]
    per_class: dict[int, dict[int, float]]  # class -> agent -> signed value
    classes: tuple[int, ...]


def plausible_action_classes(instance: Instance, target: int) -> tuple[int, ...]:
    """Default action-class set: actions whose execution by the target
    alone (everyone else staying) is collision-free."""
    classes = []
    config = instance.starts
    for action in range(NUM_ACTIONS):
        moved = list(config)
        moved[target] = apply_action(config[target], action)
        if not validate_joint_move(instance.grid, config, tuple(moved)):
            classes.append(action)
    return tuple(classes)


def _log_odds(params: ModelParams, spec: ScenarioSpec, present: tuple[int, ...],
              target: int, strategy: HypergraphStrategy,
              classes: tuple[int, ...]) -> np.ndarray:
    order = sorted(set(present) | {target})
    instance = Instance(spec.grid, tuple(spec.starts[i] for i in order),
                        tuple(spec.goals[i] for i in order))
    logits, _ = policy_forward(params, instance, instance.starts, strategy)
    row = logits.data[order.index(target)]
    log_p = row - row.max()
    log_p = log_p - np.log(np.exp(log_p).sum())
    p = np.exp(log_p)
    odds = log_p - np.log(np.clip(1.0 - p, 1e-12, None))
    return odds[list(classes)]


def shapley_exact(
    params: ModelParams,
    spec: ScenarioSpec,
    target: int,
    coalition: tuple[int, ...],
    strategy: HypergraphStrategy,
    classes: tuple[int, ...] | None = None,
    average_flipped: bool = True,
) -> ShapleyReport:
    """Exact Shapley attribution of coalition agents' influence on the
    target agent's action-class log-odds.

    The characteristic value of a subset S is the target's log-odds with
    only S (plus the target itself) present on the map; all 2^k subsets
    are enumerated, so the coalition is capped at 6 agents. Per-agent
    scores are the mean absolute value across the plausible action classes,
    averaged with the horizontally flipped scenario to cancel learned
    left/right asymmetries, and reported as percentages of the total.
    """
    if len(coalition) > _SHAPLEY_MAX_COALITION:
        raise ResourceLimitError(
            f"exact enumeration capped at {_SHAPLEY_MAX_COALITION} agents")
    if target in coalition:
        raise ValueError("target cannot be part of the coalition")
    classes = classes if classes is not None else \
        plausible_action_classes(spec.instance(), target)
    specs = [spec, spec.flipped()] if average_flipped else [spec]

    k = len(coalition)
    weights = {s: math.factorial(s) * math.factorial(k - s - 1) / math.factorial(k)
               for s in range(k)}
    per_class_total: dict[int, dict[int, float]] = {c: {i: 0.0 for i in coalition}
                                                    for c in classes}
    for variant in specs:
        cache: dict[tuple[int, ...], np.ndarray] = {}

        def value(subset: tuple[int, ...]) -> np.ndarray:
            if subset not in cache:
                cache[subset] = _log_odds(params, variant, subset, target,
                                          strategy, classes)
            return cache[subset]

        for i in coalition:
            others = tuple(a for a in coalition if a != i)
            for size in range(len(others) + 1):
                for subset in combinations(others, size):
                    gain = value(tuple(sorted(subset + (i,)))) - value(subset)
                    for ci, c in enumerate(classes):
                        per_class_total[c][i] += weights[size] * gain[ci] / len(specs)

    values = {i: float(np.mean([abs(per_class_total[c][i]) for c in classes]))
              for i in coalition}
    total = sum(values.values())
    percentages = {i: (100.0 * v / total if total > 0 else 0.0)
                   for i, v in values.items()}
    return ShapleyReport(tuple(coalition), values, percentages,
                         per_class_total, tuple(classes))


# ------------------------------------------------------------ failure modes

@dataclass(frozen=True)
class FailureReport:
    labels: tuple[str, ...]  # success | deadlock | livelock | timeout
    partial_success_rate: float


def classify_failures(trajectory: Trajectory, instance: Instance) -> FailureReport:
    """Per-agent outcome labels for a finished episode.

    An agent off its goal is deadlocked when its last 5 actions kept it in
    place, livelocked when its tail strictly alternates between two cells
    for at least 3 round trips, and otherwise just timed out.
    """
    labels = []
    at_goal = 0
    for i, goal in enumerate(instance.goals):
        positions = [c[i] for c in trajectory.configs]
        if positions[-1] == goal:
            labels.append("success")
            at_goal += 1
        elif len(positions) >= 6 and len(set(positions[-6:])) == 1:
            labels.append("deadlock")
        elif _oscillations(positions) >= 3:
            labels.append("livelock")
        else:
            labels.append("timeout")
    return FailureReport(tuple(labels), at_goal / len(instance.goals))


def _oscillations(positions: list[Cell]) -> int:
    """Round trips in the longest strictly-alternating two-cell suffix."""
    if len(positions) < 3:
        return 0
    a, b = positions[-1], positions[-2]
    if a == b:
        return 0
    length = 2
    for idx in range(len(positions) - 3, -1, -1):
        expected = a if (len(positions) - idx) % 2 == 1 else b
        if positions[idx] != expected:
            break
        length += 1
    return (length - 1) // 2
