"""The sampling-temperature module and its PPO trainer.

Per agent, an actor MLP reads the action logits plus local observability
statistics and produces a pre-squash value whose sigmoid is scaled into
tau in [0.5, 1.0]; a critic with the same inputs values the state as the
mean of its per-agent outputs. Training explores with a Gaussian on the
pre-squash value (learned state-independent spread) and updates with the
clipped surrogate objective on generalised-advantage estimates. Rewards
are terminal only: +1 per agent when everybody reached their goal, else -1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .. import autodiff as ad
from ..autodiff import Tensor
from ..experts import PibtState, collision_shield
from ..grid import Instance
from ..hypergraphs import HypergraphStrategy
from ..network import ModelParams, network_forward
from ..network.policy import build_structure
from ..observation import observe_all
from ..rollout import agent_statistics
from .config import PpoConfig
from .optim import Adam

_LOG_2PI = math.log(2.0 * math.pi)


def temperature_forward(params: ModelParams, stats: np.ndarray
                        ) -> tuple[Tensor, Tensor, Tensor]:
    """Returns (tau per agent in [0.5, 1.0], state value, pre-squash mean)."""
    s = Tensor(np.asarray(stats, dtype=float))

    def mlp(head: str) -> Tensor:
        h = ad.relu(ad.add(ad.matmul(s, params[f"temp.{head}.l1.w"]),
                           params[f"temp.{head}.l1.b"]))
        out = ad.add(ad.matmul(h, params[f"temp.{head}.l2.w"]),
                     params[f"temp.{head}.l2.b"])
        return ad.reshape(out, (-1,))

    mu = mlp("actor")
    tau = ad.add(ad.scale(ad.sigmoid(mu), 0.5), Tensor(0.5))
    value = ad.tmean(mlp("critic"))
    return tau, value, mu


def make_tau_source(params: ModelParams):
    """Deterministic tau source for evaluation rollouts (the Gaussian mean)."""

    def source(stats: np.ndarray, logits: np.ndarray) -> np.ndarray:
        tau, _, _ = temperature_forward(params, stats)
        return tau.data

    return source


@dataclass
class RolloutBuffer:
    """Flat per-agent inputs/actions plus per-timestep PPO quantities."""

    agent_stats: list[np.ndarray] = field(default_factory=list)   # (n_t, D)
    agent_actions: list[np.ndarray] = field(default_factory=list)  # (n_t,)
    logp_old: list[float] = field(default_factory=list)
    values: list[float] = field(default_factory=list)
    rewards: list[float] = field(default_factory=list)
    dones: list[bool] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.rewards)


def _gaussian_logp(u: Tensor, mu: Tensor, log_std: Tensor) -> Tensor:
    diff = ad.sub(u, mu)
    inv_var = ad.exp(ad.scale(log_std, -2.0))
    quad = ad.scale(ad.mul(ad.mul(diff, diff), inv_var), -0.5)
    return ad.add(quad, ad.scale(ad.add(ad.scale(log_std, 2.0),
                                        Tensor(_LOG_2PI)), -0.5))


def collect_temperature_rollouts(
    params: ModelParams,
    instances: list[Instance],
    strategy: HypergraphStrategy,
    step_limit: int,
    seed: int = 0,
) -> tuple[RolloutBuffer, float]:
    """Shielded rollouts with stochastically sampled temperatures; returns
    the PPO buffer and the success rate over the batch."""
    buffer = RolloutBuffer()
    rng = np.random.default_rng(seed)
    std = float(np.exp(params["temp.log_std"].data[0]))
    successes = 0
    for instance in instances:
        fields = instance.goal_distance_fields()
        state = PibtState.initial(instance)
        structure = None
        for step in range(step_limit):
            if all(c == g for c, g in zip(state.config, instance.goals)):
                break
            if step % strategy.refresh_period == 0 or structure is None:
                structure = build_structure(strategy, instance, state.config,
                                            params.arch.r_comm)
            obs = observe_all(instance, state.config, params.arch.r_obs, fields)
            logits_t, _ = network_forward(params, obs, structure)
            logits = logits_t.data
            stats = agent_statistics(obs, logits, instance, state.config, fields)
            tau_mean, value, mu = temperature_forward(params, stats)
            u = mu.data + std * rng.normal(size=mu.data.shape)
            tau = 0.5 + 0.5 / (1.0 + np.exp(-u))
            logp = float(np.sum(
                -0.5 * ((u - mu.data) / std) ** 2
                - np.log(std) - 0.5 * _LOG_2PI))
            _, state = collision_shield(instance.grid, state, instance.goals,
                                        logits, tau, rng)
            done = all(c == g for c, g in zip(state.config, instance.goals))
            buffer.agent_stats.append(stats)
            buffer.agent_actions.append(u)
            buffer.logp_old.append(logp)
            buffer.values.append(float(value.data))
            buffer.rewards.append(0.0)
            buffer.dones.append(done)
            if done:
                break
        success = all(c == g for c, g in zip(state.config, instance.goals))
        successes += success
        if len(buffer):
            buffer.rewards[-1] = 1.0 if success else -1.0
            buffer.dones[-1] = True
    return buffer, successes / max(len(instances), 1)


def gae_advantages(buffer: RolloutBuffer, config: PpoConfig
                   ) -> tuple[np.ndarray, np.ndarray]:
    """Generalised advantage estimates and value targets per timestep."""
    T = len(buffer)
    adv = np.zeros(T)
    running = 0.0
    next_value = 0.0
    for t in reversed(range(T)):
        if buffer.dones[t]:
            running = 0.0
            next_value = 0.0
        delta = buffer.rewards[t] + config.discount * next_value - buffer.values[t]
        running = delta + config.discount * config.gae_lambda * running
        adv[t] = running
        next_value = buffer.values[t]
    returns = adv + np.asarray(buffer.values)
    return adv, returns


def ppo_update(params: ModelParams, buffer: RolloutBuffer, config: PpoConfig,
               optimizer: Adam | None = None) -> dict[str, float]:
    """One clipped-surrogate pass over the buffer (no-op when empty).

    The actor maximises min(ratio * A, clip(ratio) * A) with the ratio of
    new to old Gaussian likelihoods of the stored pre-squash actions; the
    critic regresses onto the GAE value targets.
    """
    if not len(buffer):
        return {"actor_loss": 0.0, "value_loss": 0.0, "steps": 0}
    if optimizer is None:
        optimizer = Adam(params.trainable("temperature"), config.learning_rate)
    adv, returns = gae_advantages(buffer, config)

    agent_step = np.concatenate([np.full(len(s), t, dtype=int)
                                 for t, s in enumerate(buffer.agent_stats)])
    stats = np.concatenate(buffer.agent_stats, axis=0)
    actions = np.concatenate(buffer.agent_actions)
    logp_old = np.asarray(buffer.logp_old)
    T = len(buffer)

    order = np.random.default_rng(0).permutation(T)
    actor_losses, value_losses = [], []
    for start in range(0, T, config.batch_size):
        steps = order[start:start + config.batch_size]
        remap = {int(t): i for i, t in enumerate(steps)}
        mask = np.isin(agent_step, steps)
        seg = np.array([remap[int(t)] for t in agent_step[mask]])

        with ad.Tape() as tape:
            _, value, mu = temperature_forward(params, stats[mask])
            logp_agent = _gaussian_logp(Tensor(actions[mask]), mu,
                                        params["temp.log_std"])
            logp_new = ad.segment_sum(ad.reshape(logp_agent, (-1, 1)), seg,
                                      len(steps))
            logp_new = ad.reshape(logp_new, (-1,))
            ratio = ad.exp(ad.sub(logp_new, Tensor(logp_old[steps])))
            adv_t = Tensor(adv[steps])
            surrogate = ad.minimum(
                ad.mul(ratio, adv_t),
                ad.mul(ad.clamp(ratio, 1.0 - config.clip_ratio,
                                1.0 + config.clip_ratio), adv_t))
            actor_loss = ad.scale(ad.tmean(surrogate), -1.0)

            # Per-timestep values: mean of the critic over each step's agents.
            h = ad.relu(ad.add(ad.matmul(Tensor(stats[mask]),
                                         params["temp.critic.l1.w"]),
                               params["temp.critic.l1.b"]))
            per_agent = ad.reshape(ad.add(ad.matmul(h, params["temp.critic.l2.w"]),
                                          params["temp.critic.l2.b"]), (-1, 1))
            counts = np.bincount(seg, minlength=len(steps)).astype(float)
            sums = ad.segment_sum(per_agent, seg, len(steps))
            v_pred = ad.mul(ad.reshape(sums, (-1,)),
                            Tensor(1.0 / np.maximum(counts, 1.0)))
            v_err = ad.sub(v_pred, Tensor(returns[steps]))
            value_loss = ad.tmean(ad.mul(v_err, v_err))

            total = ad.add(actor_loss, ad.scale(value_loss, 0.5))
        optimizer.step(ad.backward(tape, total))
        actor_losses.append(float(actor_loss.data))
        value_losses.append(float(value_loss.data))
    return {"actor_loss": float(np.mean(actor_losses)),
            "value_loss": float(np.mean(value_losses)), "steps": T}
