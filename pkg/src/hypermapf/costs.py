"""Trajectories and sum-of-costs accounting."""

from __future__ import annotations

from dataclasses import dataclass

from .grid import Configuration, Instance, action_between
from .moves import validate_joint_move


@dataclass(frozen=True)
class Trajectory:
    """A sequence of configurations plus the per-agent actions between them."""

    configs: tuple[Configuration, ...]
    actions: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if len(self.actions) != len(self.configs) - 1:
            raise ValueError("need exactly one action row per transition")

    @staticmethod
    def from_configs(configs: list[Configuration]) -> "Trajectory":
        actions = tuple(
            tuple(action_between(a, b) for a, b in zip(src, dst))
            for src, dst in zip(configs, configs[1:])
        )
        return Trajectory(tuple(configs), actions)

    @property
    def num_steps(self) -> int:
        return len(self.configs) - 1

    @property
    def num_agents(self) -> int:
        return len(self.configs[0])

    def final(self) -> Configuration:
        return self.configs[-1]


@dataclass(frozen=True)
class SocReport:
    per_agent: tuple[int, ...]
    total: int
    success: bool
    at_goal: tuple[bool, ...]


def validate_trajectory(instance: Instance, trajectory: Trajectory) -> None:
    """Raise ValueError unless every transition passes the joint-move checks."""
    if trajectory.configs[0] != instance.starts:
        raise ValueError("trajectory does not start at the instance starts")
    for t, (src, dst) in enumerate(zip(trajectory.configs, trajectory.configs[1:])):
        conflicts = validate_joint_move(instance.grid, src, dst)
        if conflicts:
            raise ValueError(f"invalid transition at step {t}: {conflicts[0]}")


def soc_metrics(trajectory: Trajectory, instance: Instance, episode_limit: int) -> SocReport:
    """Standard sum-of-costs: each agent pays until its final arrival at the
    goal; agents not at their goal at the end are charged `episode_limit`.
    Success requires every agent to finish on its goal."""
    validate_trajectory(instance, trajectory)
    costs = []
    at_goal = []
    for i, goal in enumerate(instance.goals):
        positions = [c[i] for c in trajectory.configs]
        if positions[-1] != goal:
            costs.append(episode_limit)
            at_goal.append(False)
            continue
        settle = len(positions) - 1
        while settle > 0 and positions[settle - 1] == goal:
            settle -= 1
        costs.append(settle)
        at_goal.append(True)
    return SocReport(tuple(costs), sum(costs), all(at_goal), tuple(at_goal))
