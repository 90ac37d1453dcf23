"""Benchmark execution and the derived score formulas.

Relative sum-of-costs divides a solver's SoC by a configurable baseline
solver's SoC on the same instance (the in-repo default is the greedy
priority-based expert; reports always name the baseline). Failed agents
are charged the step limit. Aggregates always recompute exactly from the
raw per-instance rows.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..costs import soc_metrics
from ..experts import joint_optimal, pibt_expert
from ..grid import Instance
from ..hypergraphs import HypergraphStrategy
from ..network import ModelParams
from ..rollout import run_policy

SolverFn = Callable[[Instance, int, int], tuple]  # -> (trajectory, success, timed_out)


def pibt_solver() -> tuple[str, SolverFn]:
    def solve(instance, step_limit, seed):
        result = pibt_expert(instance, step_limit)
        return result.trajectory, result.success, False
    return "pibt", solve


def policy_solver(params: ModelParams, strategy: HypergraphStrategy,
                  tau=1.0, time_limit: float | None = None,
                  name: str = "policy") -> tuple[str, SolverFn]:
    def solve(instance, step_limit, seed):
        result = run_policy(params, instance, strategy, step_limit, seed=seed,
                            tau=tau, time_limit=time_limit)
        return result.trajectory, result.success, result.timed_out
    return name, solve


def joint_solver(expansion_limit: int = 200_000) -> tuple[str, SolverFn]:
    def solve(instance, step_limit, seed):
        solution = joint_optimal(instance, expansion_limit)
        if solution is None:
            raise ValueError("instance is infeasible for the exact solver")
        return solution.trajectory, True, False
    return "joint-optimal", solve


@dataclass(frozen=True)
class InstanceRow:
    index: int
    map_label: str
    num_agents: int
    success: bool
    soc: int
    baseline_soc: int
    rel_soc: float
    runtime: float
    timed_out: bool
    steps: int


@dataclass
class BenchmarkReport:
    solver_name: str
    baseline_name: str
    step_limit: int
    rows: list[InstanceRow] = field(default_factory=list)

    def aggregates(self) -> dict[tuple[str, int], dict[str, float]]:
        """Per (map label, agent count): success rate, mean Rel. SoC with a
        normal-approximation 95% CI, and mean runtime."""
        groups: dict[tuple[str, int], list[InstanceRow]] = {}
        for row in self.rows:
            groups.setdefault((row.map_label, row.num_agents), []).append(row)
        out = {}
        for key, rows in sorted(groups.items()):
            rel = np.array([r.rel_soc for r in rows])
            ci = 1.96 * rel.std(ddof=1) / np.sqrt(len(rel)) if len(rel) > 1 else 0.0
            out[key] = {
                "instances": len(rows),
                "success_rate": float(np.mean([r.success for r in rows])),
                "mean_rel_soc": float(rel.mean()),
                "rel_soc_ci95": float(ci),
                "mean_runtime": float(np.mean([r.runtime for r in rows])),
            }
        return out


def evaluate(
    solver: tuple[str, SolverFn],
    instances: list[Instance],
    step_limit: int = 256,
    time_limit: float | None = None,
    baseline: tuple[str, SolverFn] | None = None,
    labels: list[str] | None = None,
    seed: int = 0,
) -> BenchmarkReport:
    """Run a solver over instances and score it against the baseline."""
    solver_name, solve = solver
    baseline_name, solve_baseline = baseline if baseline is not None else pibt_solver()
    labels = labels or ["map"] * len(instances)
    report = BenchmarkReport(solver_name, baseline_name, step_limit)
    for idx, (instance, label) in enumerate(zip(instances, labels)):
        started = time.perf_counter()
        timed_out = False
        try:
            trajectory, success, timed_out = solve(instance, step_limit, seed + idx)
        except TimeoutError:
            trajectory, success, timed_out = None, False, True
        elapsed = time.perf_counter() - started
        if time_limit is not None and elapsed > time_limit:
            timed_out = True
        if trajectory is not None:
            soc = soc_metrics(trajectory, instance, step_limit).total
            steps = trajectory.num_steps
        else:
            soc = step_limit * instance.num_agents
            steps = 0
        base_traj, base_success, _ = solve_baseline(instance, step_limit, seed + idx)
        base_soc = soc_metrics(base_traj, instance, step_limit).total
        rel = soc / base_soc if base_soc > 0 else (1.0 if soc == 0 else float("inf"))
        report.rows.append(InstanceRow(idx, label, instance.num_agents, success,
                                       soc, base_soc, rel, elapsed, timed_out,
                                       steps))
    return report


@dataclass(frozen=True)
class RadarScores:
    solution_quality: dict[tuple[str, int], float]
    scalability: dict[tuple[str, int], float]


def radar_metrics(report: BenchmarkReport) -> RadarScores:
    """Both radar formulas, verbatim.

    Solution quality per instance is SoC_best / SoC (0 when no solution was
    found), with SoC_best the best SoC known for the instance across the
    solver and its baseline. Scalability of an agent-count group is
    (runtime(n)/n) * (min_agents/runtime(min_agents)) against the lowest
    agent count of the same map (0 for timed-out instances).
    """
    if not report.rows:
        raise ValueError("empty report has no scalability anchor")
    by_label: dict[str, list[InstanceRow]] = {}
    for row in report.rows:
        by_label.setdefault(row.map_label, []).append(row)

    quality: dict[tuple[str, int], float] = {}
    scalability: dict[tuple[str, int], float] = {}
    for label, rows in sorted(by_label.items()):
        counts = sorted({r.num_agents for r in rows})
        anchor_n = counts[0]
        anchor_rows = [r for r in rows if r.num_agents == anchor_n]
        anchor_runtime = float(np.mean([r.runtime for r in anchor_rows]))
        if anchor_runtime <= 0:
            raise ValueError(f"anchor runtime for {label!r} is zero")
        for n in counts:
            group = [r for r in rows if r.num_agents == n]
            q_vals, s_vals = [], []
            for r in group:
                best = min([r.baseline_soc] + ([r.soc] if r.success else []))
                q_vals.append(best / r.soc if r.success else 0.0)
                s_vals.append(0.0 if r.timed_out else
                              (r.runtime / n) * (anchor_n / anchor_runtime))
            quality[(label, n)] = float(np.mean(q_vals))
            scalability[(label, n)] = float(np.mean(s_vals))
    return RadarScores(quality, scalability)
