"""Demonstration datasets: expert-labelled timesteps and their batching.

A sample is one full timestep of one instance: every agent's observation,
the communication structure, and every agent's expert action. Minibatches
merge samples into one disjoint-union structure so a whole batch runs
through the network in a single forward pass.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..costs import soc_metrics
from ..experts import DemoRecord, ExpertResult, observation_hash, pibt_expert
from ..grid import Instance
from ..hypergraphs import FlatGraph, FlatHypergraph, HypergraphStrategy
from ..network import ModelParams
from ..network.policy import build_structure
from ..observation import observe_all


@dataclass(frozen=True)
class Sample:
    obs: np.ndarray               # (n, 4, F, F)
    structure: FlatHypergraph | FlatGraph
    actions: np.ndarray           # (n,)
    instance_ref: int
    timestep: int

    @property
    def num_agents(self) -> int:
        return len(self.actions)


@dataclass
class Dataset:
    samples: list[Sample] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.samples)

    def extend(self, samples: list[Sample]) -> None:
        self.samples.extend(samples)

    def num_actions_total(self) -> int:
        return sum(s.num_agents for s in self.samples)

    def split(self, val_fraction: float, seed: int) -> tuple["Dataset", "Dataset"]:
        rng = np.random.default_rng(seed)
        order = rng.permutation(len(self.samples))
        n_val = int(round(val_fraction * len(self.samples)))
        val_idx = set(int(i) for i in order[:n_val])
        train = [s for i, s in enumerate(self.samples) if i not in val_idx]
        val = [s for i, s in enumerate(self.samples) if i in val_idx]
        return Dataset(train), Dataset(val)


def samples_from_expert(
    instance: Instance,
    result: ExpertResult,
    params: ModelParams,
    strategy: HypergraphStrategy,
    instance_ref: int,
) -> tuple[list[Sample], list[DemoRecord]]:
    fields = instance.goal_distance_fields()
    samples, records = [], []
    for t, (config, actions) in enumerate(zip(result.trajectory.configs,
                                              result.trajectory.actions)):
        obs = observe_all(instance, config, params.arch.r_obs, fields)
        structure = build_structure(strategy, instance, config, params.arch.r_comm)
        samples.append(Sample(obs, structure, np.array(actions, dtype=int),
                              instance_ref, t))
        records.append(DemoRecord(instance_ref, t,
                                  tuple(observation_hash(o) for o in obs),
                                  tuple(actions)))
    return samples, records


@dataclass
class CollectStats:
    collected: int
    skipped: int
    samples: int
    expert_socs: dict[int, int]


def collect_dataset(
    instances: list[Instance],
    params: ModelParams,
    strategy: HypergraphStrategy,
    step_limit: int = 256,
    expert=pibt_expert,
) -> tuple[Dataset, CollectStats, list[DemoRecord]]:
    """Label every timestep of every expert-solved instance; unsolved
    instances are skipped and counted."""
    dataset = Dataset()
    records: list[DemoRecord] = []
    skipped = 0
    expert_socs: dict[int, int] = {}
    for ref, instance in enumerate(instances):
        result = expert(instance, step_limit)
        if not result.success:
            skipped += 1
            continue
        expert_socs[ref] = soc_metrics(result.trajectory, instance, step_limit).total
        samples, recs = samples_from_expert(instance, result, params, strategy, ref)
        dataset.extend(samples)
        records.extend(recs)
    stats = CollectStats(len(instances) - skipped, skipped, len(dataset), expert_socs)
    return dataset, stats, records


def merge_samples(samples: list[Sample]) -> tuple[np.ndarray, FlatHypergraph | FlatGraph, np.ndarray]:
    """Disjoint union of a minibatch: stacked observations, offset-shifted
    structure indices, concatenated labels."""
    obs = np.concatenate([s.obs for s in samples], axis=0)
    labels = np.concatenate([s.actions for s in samples])
    if isinstance(samples[0].structure, FlatGraph):
        src, dst, geom = [], [], []
        offset = 0
        for s in samples:
            g: FlatGraph = s.structure
            src.append(g.src + offset)
            dst.append(g.dst + offset)
            geom.append(g.geometry)
            offset += g.num_nodes
        return obs, FlatGraph(offset, np.concatenate(src), np.concatenate(dst),
                              np.concatenate(geom)), labels
    tail_edge, tail_node, head_edge, head_node, geom = [], [], [], [], []
    node_offset = edge_offset = 0
    for s in samples:
        f: FlatHypergraph = s.structure
        tail_edge.append(f.tail_edge + edge_offset)
        tail_node.append(f.tail_node + node_offset)
        head_edge.append(f.head_edge + edge_offset)
        head_node.append(f.head_node + node_offset)
        geom.append(f.tail_geometry)
        node_offset += f.num_nodes
        edge_offset += f.num_edges
    merged = FlatHypergraph(
        num_nodes=node_offset,
        num_edges=edge_offset,
        tail_edge=np.concatenate(tail_edge),
        tail_node=np.concatenate(tail_node),
        head_edge=np.concatenate(head_edge),
        head_node=np.concatenate(head_node),
        tail_geometry=np.concatenate(geom) if geom else np.zeros((0, 3)),
    )
    return obs, merged, labels
