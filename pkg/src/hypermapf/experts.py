"""In-repo solvers: an exact joint-state search for tiny instances, PIBT
for scalable demonstrations, and PIBT-based collision shielding that turns
per-agent action rankings into a conflict-free joint move."""

from __future__ import annotations

import hashlib
import heapq
import itertools
import struct
from dataclasses import dataclass

import numpy as np

from .costs import Trajectory
from .errors import ResourceLimitError
from .grid import (
    ACTION_DELTAS,
    NUM_ACTIONS,
    Cell,
    Configuration,
    GridMap,
    Instance,
    apply_action,
    bfs_dist,
)

_JOINT_MAX_AGENTS = 4
_JOINT_MAX_FREE = 64


@dataclass(frozen=True)
class JointSolution:
    soc: int
    trajectory: Trajectory


def joint_optimal(instance: Instance, expansion_limit: int = 200_000) -> JointSolution | None:
    """Provably optimal sum-of-costs via best-first search over joint states.

    Waiting on the goal is free until the agent moves off, at which point
    the accrued waits are charged back, so the accumulated cost at the goal
    state equals the true sum of final arrival times. Returns None when the
    search space is exhausted (infeasible); raises ResourceLimitError when
    the expansion budget runs out first.
    """
    n = instance.num_agents
    if n > _JOINT_MAX_AGENTS:
        raise ValueError(f"joint search limited to {_JOINT_MAX_AGENTS} agents")
    if instance.grid.num_free > _JOINT_MAX_FREE:
        raise ValueError(f"joint search limited to {_JOINT_MAX_FREE} free cells")
    fields = instance.goal_distance_fields()
    if any(np.isinf(f[s[1], s[0]]) for f, s in zip(fields, instance.starts)):
        return None

    def heuristic(config: Configuration) -> float:
        return sum(fields[i][c[1], c[0]] for i, c in enumerate(config))

    moves_of: dict[Cell, list[Cell]] = {}
    for cell in instance.grid.free_cells():
        moves_of[cell] = [cell] + instance.grid.neighbors(cell)

    start_state = (instance.starts, (0,) * n)
    best: dict[tuple, int] = {start_state: 0}
    parent: dict[tuple, tuple | None] = {start_state: None}
    counter = itertools.count()
    frontier = [(heuristic(instance.starts), next(counter), 0, start_state)]
    expansions = 0

    while frontier:
        f, _, g, state = heapq.heappop(frontier)
        if best.get(state, np.inf) < g:
            continue
        config, rests = state
        if all(c == instance.goals[i] for i, c in enumerate(config)):
            configs = []
            cur = state
            while cur is not None:
                configs.append(cur[0])
                cur = parent[cur]
            configs.reverse()
            return JointSolution(g, Trajectory.from_configs(configs))
        expansions += 1
        if expansions > expansion_limit:
            raise ResourceLimitError(
                f"joint search exceeded {expansion_limit} expansions")

        for targets in itertools.product(*(moves_of[c] for c in config)):
            if len(set(targets)) != n:
                continue
            if any(targets[i] == config[j] and targets[j] == config[i]
                   and config[i] != config[j]
                   for i in range(n) for j in range(i + 1, n)):
                continue
            cost = 0
            new_rests = []
            for i in range(n):
                at_goal = config[i] == instance.goals[i]
                if at_goal and targets[i] == config[i]:
                    new_rests.append(rests[i] + 1)
                elif at_goal:
                    cost += 1 + rests[i]
                    new_rests.append(0)
                else:
                    cost += 1
                    new_rests.append(0)
            nxt = (tuple(targets), tuple(new_rests))
            ng = g + cost
            if ng < best.get(nxt, np.inf):
                best[nxt] = ng
                parent[nxt] = state
                heapq.heappush(frontier,
                               (ng + heuristic(targets), next(counter), ng, nxt))
    return None


# ----------------------------------------------------------------------- PIBT

@dataclass
class PibtState:
    config: Configuration
    priorities: np.ndarray  # fractional base by id, +1 per step off-goal

    @staticmethod
    def initial(instance: Instance) -> "PibtState":
        n = instance.num_agents
        return PibtState(instance.starts, np.arange(n) / max(n, 1))


def pibt_step(grid: GridMap, state: PibtState,
              preferences: list[list[int]]) -> Configuration:
    """One PIBT round: agents claim cells in priority order; an agent
    claiming an occupied cell wakes the occupant (priority inheritance)
    and retries other candidates when the occupant cannot make way
    (backtracking). The result is always a valid joint move."""
    n = len(state.config)
    if any(len(p) != NUM_ACTIONS or sorted(p) != list(range(NUM_ACTIONS))
           for p in preferences):
        raise ValueError("preferences must rank all actions for every agent")
    cur = state.config
    occupant = {cell: i for i, cell in enumerate(cur)}
    next_pos: dict[int, Cell] = {}
    claimed: dict[Cell, int] = {}

    def plan(i: int, parent_cell: Cell | None) -> bool:
        for action in preferences[i]:
            v = apply_action(cur[i], action)
            if not grid.is_free(v) or v in claimed:
                continue
            if parent_cell is not None and v == parent_cell:
                continue  # would swap with the agent that woke us
            claimed[v] = i
            next_pos[i] = v
            k = occupant.get(v)
            if k is not None and k != i and k not in next_pos:
                if not plan(k, cur[i]):
                    if claimed.get(v) == i:
                        del claimed[v]
                    del next_pos[i]
                    continue
            return True
        next_pos[i] = cur[i]
        claimed[cur[i]] = i
        return False

    for i in sorted(range(n), key=lambda a: -state.priorities[a]):
        if i not in next_pos:
            plan(i, None)
    return tuple(next_pos[i] for i in range(n))


def _advance_priorities(state: PibtState, config: Configuration,
                        goals: Configuration) -> PibtState:
    n = len(config)
    base = np.arange(n) / max(n, 1)
    prios = np.where([config[i] == goals[i] for i in range(n)],
                     base, state.priorities + 1.0)
    return PibtState(config, prios)


def greedy_preferences(config: Configuration, fields: list[np.ndarray],
                       grid: GridMap) -> list[list[int]]:
    """Rank actions by the resulting goal distance (ties by action index,
    so staying beats sideways moves on plateaus)."""
    prefs = []
    for i, cell in enumerate(config):
        scores = []
        for action in range(NUM_ACTIONS):
            target = apply_action(cell, action)
            dist = fields[i][target[1], target[0]] if grid.is_free(target) else np.inf
            scores.append((dist, action))
        prefs.append([a for _, a in sorted(scores)])
    return prefs


@dataclass(frozen=True)
class ExpertResult:
    trajectory: Trajectory
    success: bool


def pibt_expert(instance: Instance, step_limit: int = 256) -> ExpertResult:
    """Distance-greedy PIBT until every agent sits on its goal or the step
    limit runs out (in which case the partial trajectory is flagged)."""
    fields = instance.goal_distance_fields()
    state = PibtState.initial(instance)
    configs = [instance.starts]
    for _ in range(step_limit):
        if all(c == g for c, g in zip(state.config, instance.goals)):
            break
        state = _advance_priorities(state, state.config, instance.goals)
        prefs = greedy_preferences(state.config, fields, instance.grid)
        nxt = pibt_step(instance.grid, state, prefs)
        state = PibtState(nxt, state.priorities)
        configs.append(nxt)
    success = all(c == g for c, g in zip(configs[-1], instance.goals))
    return ExpertResult(Trajectory.from_configs(configs), success)


def sampled_rankings(logits: np.ndarray, tau: np.ndarray | float,
                     rng: np.random.Generator) -> list[list[int]]:
    """Per-agent action rankings drawn without replacement from the
    temperature-scaled softmax (Gumbel perturbation ordering)."""
    logits = np.asarray(logits, dtype=float)
    tau_arr = np.broadcast_to(np.asarray(tau, dtype=float), (logits.shape[0],))
    if np.any(tau_arr <= 0):
        raise ValueError("temperatures must be positive")
    gumbel = rng.gumbel(size=logits.shape)
    keys = logits / tau_arr[:, None] + gumbel
    return [list(np.argsort(-row, kind="stable")) for row in keys]


def collision_shield(grid: GridMap, state: PibtState, goals: Configuration,
                     logits: np.ndarray, tau: np.ndarray | float,
                     rng: np.random.Generator) -> tuple[Configuration, PibtState]:
    """Sample a full action ranking per agent from the tempered policy and
    resolve it with PIBT; the returned joint move is always conflict-free."""
    state = _advance_priorities(state, state.config, goals)
    prefs = sampled_rankings(logits, tau, rng)
    nxt = pibt_step(grid, state, prefs)
    return nxt, PibtState(nxt, state.priorities)


# ------------------------------------------------------- demonstration log

_DEMO_MAGIC = b"HMDL1\n"


@dataclass(frozen=True)
class DemoRecord:
    """One expert-labelled timestep: which instance, when, an 8-byte hash
    of each agent's observation tensor, and each agent's expert action."""

    instance_ref: int
    timestep: int
    obs_hashes: tuple[int, ...]
    actions: tuple[int, ...]


def observation_hash(obs: np.ndarray) -> int:
    digest = hashlib.sha256()
    digest.update(str(obs.shape).encode())
    digest.update(np.ascontiguousarray(obs, dtype="<f8").tobytes())
    return int.from_bytes(digest.digest()[:8], "big")


def write_demonstration_log(path, records: list[DemoRecord]) -> None:
    """Framed binary layout: the magic line, then per record a u32 frame
    length followed by `u32 instance_ref, u32 timestep, u16 n` and n pairs
    of `u64 obs_hash, u8 action` (all little-endian)."""
    with open(path, "wb") as fh:
        fh.write(_DEMO_MAGIC)
        for rec in records:
            n = len(rec.actions)
            payload = struct.pack("<IIH", rec.instance_ref, rec.timestep, n)
            for h, a in zip(rec.obs_hashes, rec.actions):
                payload += struct.pack("<QB", h, a)
            fh.write(struct.pack("<I", len(payload)))
            fh.write(payload)


def read_demonstration_log(path) -> list[DemoRecord]:
    records = []
    with open(path, "rb") as fh:
        if fh.read(len(_DEMO_MAGIC)) != _DEMO_MAGIC:
            raise ValueError(f"{path} is not a demonstration log")
        while True:
            head = fh.read(4)
            if not head:
                break
            (length,) = struct.unpack("<I", head)
            payload = fh.read(length)
            ref, t, n = struct.unpack_from("<IIH", payload, 0)
            hashes, actions = [], []
            offset = 10
            for _ in range(n):
                h, a = struct.unpack_from("<QB", payload, offset)
                offset += 9
                hashes.append(h)
                actions.append(a)
            records.append(DemoRecord(ref, t, tuple(hashes), tuple(actions)))
    return records
