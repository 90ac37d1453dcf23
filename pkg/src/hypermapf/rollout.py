"""Shielded policy rollouts shared by training, evaluation and analysis."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .costs import Trajectory
from .experts import PibtState, collision_shield
from .grid import Configuration, Instance
from .hypergraphs import HypergraphStrategy
from .network import AttentionRecord, ModelParams, network_forward
from .network.policy import build_structure
from .observation import observe_all

TauSource = float | Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass
class RolloutResult:
    trajectory: Trajectory
    success: bool
    timed_out: bool
    elapsed: float
    attention: list[AttentionRecord] | None = None


def agent_statistics(obs: np.ndarray, logits: np.ndarray, instance: Instance,
                     config: Configuration,
                     dist_fields: list[np.ndarray]) -> np.ndarray:
    """Per-agent summary rows fed to the temperature module: the action
    logits, agents and obstacles visible in the FOV, and the goal distance
    plus offset."""
    rows = []
    for i, (x, y) in enumerate(config):
        gd = dist_fields[i][y, x]
        gd = gd if np.isfinite(gd) else -1.0
        gx, gy = instance.goals[i]
        rows.append(np.concatenate([
            logits[i],
            [obs[i, 1].sum(), obs[i, 0].sum(), gd, gx - x, gy - y],
        ]))
    return np.stack(rows)


def run_policy(
    params: ModelParams,
    instance: Instance,
    strategy: HypergraphStrategy,
    step_limit: int,
    seed: int = 0,
    tau: TauSource = 1.0,
    record_attention: bool = False,
    time_limit: float | None = None,
) -> RolloutResult:
    """Roll the shielded policy until all agents reach their goals or a
    limit trips. The communication structure is rebuilt every
    `strategy.refresh_period` steps; every sampling decision comes from the
    given seed."""
    rng = np.random.default_rng(seed)
    fields = instance.goal_distance_fields()
    state = PibtState.initial(instance)
    configs = [instance.starts]
    attention: list[AttentionRecord] | None = [] if record_attention else None
    structure = None
    start_time = time.perf_counter()
    timed_out = False

    for step in range(step_limit):
        if all(c == g for c, g in zip(state.config, instance.goals)):
            break
        if time_limit is not None and time.perf_counter() - start_time > time_limit:
            timed_out = True
            break
        if step % strategy.refresh_period == 0 or structure is None:
            structure = build_structure(strategy, instance, state.config,
                                        params.arch.r_comm)
        obs = observe_all(instance, state.config, params.arch.r_obs, fields)
        logits_t, record = network_forward(params, obs, structure)
        logits = logits_t.data
        if attention is not None:
            attention.append(record)
        if callable(tau):
            stats = agent_statistics(obs, logits, instance, state.config, fields)
            tau_values = tau(stats, logits)
        else:
            tau_values = tau
        nxt, state = collision_shield(instance.grid, state, instance.goals,
                                      logits, tau_values, rng)
        configs.append(nxt)

    success = all(c == g for c, g in zip(configs[-1], instance.goals))
    return RolloutResult(Trajectory.from_configs(configs), success, timed_out,
                         time.perf_counter() - start_time, attention)
