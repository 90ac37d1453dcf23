"""Online expert phases: failure-driven corrections and quality improvement.

The failure round relabels states the learner visited on instances it could
not solve. The quality round targets instances the learner solves slowly:
when the model's cost exceeds delta_buf times the expert's, sub-instances
are extracted every h_stride steps (the visited configuration becomes the
new starts) and expert solutions that beat the model's remaining cost by
the same factor are added to the dataset, subject to a per-phase call cap.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ..costs import Trajectory, soc_metrics
from ..experts import pibt_expert
from ..grid import Instance
from ..hypergraphs import HypergraphStrategy
from ..network import ModelParams
from ..rollout import run_policy
from .config import TrainConfig
from .datasets import Dataset, merge_samples, samples_from_expert
from .imitation import il_epoch
from .optim import AdamW


@dataclass
class OnlineStats:
    rollouts: int
    failures: int
    expert_calls: int
    samples_added: int
    success_rate: float


def dagger_round(
    params: ModelParams,
    instances: list[Instance],
    dataset: Dataset,
    config: TrainConfig,
    strategy: HypergraphStrategy,
    expert=pibt_expert,
    ref_base: int = 1_000_000,
) -> OnlineStats:
    """Roll out the shielded policy on every instance; on failure, query the
    expert from the visited states (every h_stride-th one, capped by the
    expert call budget) and append the corrections to `dataset`."""
    failures = calls = added = 0
    for k, instance in enumerate(instances):
        result = run_policy(params, instance, strategy, config.step_limit,
                            seed=config.seed + k)
        if result.success:
            continue
        failures += 1
        configs = result.trajectory.configs
        for t in range(0, len(configs), config.h_stride):
            if calls >= config.expert_call_cap:
                break
            sub = Instance(instance.grid, configs[t], instance.goals)
            calls += 1
            correction = expert(sub, config.step_limit)
            if not correction.success:
                continue
            samples, _ = samples_from_expert(sub, correction, params, strategy,
                                             ref_base + instance_key(k, t))
            dataset.extend(samples)
            added += len(samples)
    success_rate = 1.0 - failures / max(len(instances), 1)
    return OnlineStats(len(instances), failures, calls, added, success_rate)


def instance_key(instance_index: int, timestep: int) -> int:
    return instance_index * 10_000 + timestep


def _suffix_soc(trajectory: Trajectory, sub: Instance, step_limit: int,
                start: int) -> int:
    suffix = Trajectory.from_configs(list(trajectory.configs[start:]))
    return soc_metrics(suffix, sub, step_limit).total


def quality_improvement_round(
    params: ModelParams,
    instances: list[Instance],
    dataset: Dataset,
    config: TrainConfig,
    strategy: HypergraphStrategy,
    expert=pibt_expert,
    expert_socs: dict[int, int] | None = None,
    ref_base: int = 2_000_000,
) -> OnlineStats:
    """Shorten slow-but-successful behaviour: triggered on an instance only
    when model SoC > delta_buf x expert SoC; keeps expert sub-solutions that
    are delta_buf x shorter than the model's remaining trajectory."""
    expert_socs = expert_socs or {}
    calls = added = triggered = successes = 0
    for k, instance in enumerate(instances):
        result = run_policy(params, instance, strategy, config.step_limit,
                            seed=config.seed + k)
        if not result.success:
            continue
        successes += 1
        model_soc = soc_metrics(result.trajectory, instance, config.step_limit).total
        if k in expert_socs:
            expert_soc = expert_socs[k]
        else:
            full = expert(instance, config.step_limit)
            if not full.success:
                continue
            expert_soc = soc_metrics(full.trajectory, instance, config.step_limit).total
        if model_soc <= config.delta_buf * expert_soc:
            continue
        triggered += 1
        configs = result.trajectory.configs
        for t in range(0, len(configs) - 1, config.h_stride):
            if calls >= config.expert_call_cap:
                break
            sub = Instance(instance.grid, configs[t], instance.goals)
            calls += 1
            solution = expert(sub, config.step_limit)
            if not solution.success:
                continue
            sub_soc = soc_metrics(solution.trajectory, sub, config.step_limit).total
            if sub_soc * config.delta_buf <= _suffix_soc(result.trajectory, sub,
                                                         config.step_limit, t):
                samples, _ = samples_from_expert(sub, solution, params, strategy,
                                                 ref_base + instance_key(k, t))
                dataset.extend(samples)
                added += len(samples)
    return OnlineStats(len(instances), triggered, calls, added,
                       successes / max(len(instances), 1))


def post_train(
    params: ModelParams,
    pretrain: Dataset,
    quality: Dataset,
    instances: list[Instance],
    config: TrainConfig,
    strategy: HypergraphStrategy,
    expert=pibt_expert,
    expert_socs: dict[int, int] | None = None,
) -> list[OnlineStats]:
    """Post-training: each epoch runs the quality-improvement expert over
    all instances and then trains on mixed batches at the configured
    quality:pretrain ratio (1:3 by default)."""
    if not len(pretrain):
        raise ValueError("pretrain dataset is empty")
    optimizer = AdamW(params.trainable("policy"), config.learning_rate,
                      weight_decay=config.weight_decay)
    rng = np.random.default_rng(config.seed)
    history = []
    for epoch in range(config.post_epochs):
        stats = quality_improvement_round(params, instances, quality, config,
                                          strategy, expert, expert_socs)
        history.append(stats)
        if not len(quality):
            warnings.warn("quality dataset empty; falling back to plain "
                          "imitation on the pretrain dataset")
            il_epoch(params, optimizer, pretrain, config, rng)
            continue
        _mixed_epoch(params, optimizer, pretrain, quality, config, rng)
    return history


def _mixed_epoch(params: ModelParams, optimizer: AdamW, pretrain: Dataset,
                 quality: Dataset, config: TrainConfig,
                 rng: np.random.Generator) -> None:
    from .. import autodiff as ad
    from ..network import network_forward

    q_share, p_share = config.quality_mix
    per_batch_q = max(1, round(config.batch_size * q_share / (q_share + p_share)))
    per_batch_p = config.batch_size - per_batch_q
    order = rng.permutation(len(pretrain))
    for start in range(0, len(order), per_batch_p):
        p_idx = order[start:start + per_batch_p]
        q_idx = rng.choice(len(quality), size=per_batch_q,
                           replace=len(quality) < per_batch_q)
        batch = [pretrain.samples[i] for i in p_idx] + \
                [quality.samples[int(i)] for i in q_idx]
        obs, structure, labels = merge_samples(batch)
        with ad.Tape() as tape:
            logits, _ = network_forward(params, obs, structure)
            loss = ad.cross_entropy_with_logits(logits, labels)
        optimizer.step(ad.backward(tape, loss))
