"""End-to-end policy: CNN encoder, stacked attention layers, MLP decoder,
with per-layer attention capture."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import autodiff as ad
from ..autodiff import Tensor
from ..grid import Configuration, Instance
from ..hypergraphs import (
    FlatGraph,
    FlatHypergraph,
    HypergraphStrategy,
    build_disk_graph,
    flatten_hypergraph,
)
from ..observation import observe_all
from .layers import gat_layer, hgnn_layer
from .params import ModelParams


@dataclass(frozen=True)
class AttentionLayer:
    """Attention of one layer in incidence-list form.

    (head_node[q], head_edge[q]) pairs carry node_edge_attn[q], the weight
    node i gives hyperedge e; (tail_edge[p], tail_node[p]) pairs carry
    edge_tail_attn[p], the weight hyperedge e gives tail member j. The
    pairwise baseline is stored in the same form with one synthetic edge
    per neighbour pair and unit tail weights.
    """

    num_nodes: int
    head_node: np.ndarray
    head_edge: np.ndarray
    node_edge_attn: np.ndarray
    tail_edge: np.ndarray
    tail_node: np.ndarray
    edge_tail_attn: np.ndarray


@dataclass(frozen=True)
class AttentionRecord:
    layers: tuple[AttentionLayer, ...]


def aggregate_attention(record: AttentionRecord) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Node-to-node attention per layer: a[i, j] sums, over hyperedges
    headed by i that contain j in their tail, the product of the node's
    edge attention and the edge's tail attention. Rows of nodes with at
    least one incident hyperedge sum to 1; nodes with none yield zero rows
    and are flagged."""
    matrices, flags = [], []
    for layer in record.layers:
        n = layer.num_nodes
        a = np.zeros((n, n))
        tails_by_edge: dict[int, list[int]] = {}
        for p, e in enumerate(layer.tail_edge):
            tails_by_edge.setdefault(int(e), []).append(p)
        for q, e in enumerate(layer.head_edge):
            i = int(layer.head_node[q])
            alpha_ie = layer.node_edge_attn[q]
            for p in tails_by_edge.get(int(e), []):
                a[i, int(layer.tail_node[p])] += alpha_ie * layer.edge_tail_attn[p]
        matrices.append(a)
        flags.append(~np.isin(np.arange(n), layer.head_node))
    return matrices, flags


def encode_observation(params: ModelParams, obs: np.ndarray) -> Tensor:
    """CNN encoder: (B, 4, F, F) observations to (B, d) node features."""
    side = params.arch.fov_side
    obs = np.asarray(obs, dtype=float)
    if obs.ndim == 3:
        obs = obs[None]
    if obs.shape[1:] != (4, side, side):
        raise ValueError(f"observation shape {obs.shape[1:]} != (4, {side}, {side})")
    x = Tensor(obs)
    x = ad.relu(ad.conv2d(x, params["encoder.conv1.w"], params["encoder.conv1.b"]))
    x = ad.relu(ad.conv2d(x, params["encoder.conv2.w"], params["encoder.conv2.b"]))
    x = ad.reshape(x, (obs.shape[0], -1))
    return ad.add(ad.matmul(x, params["encoder.fc.w"]), params["encoder.fc.b"])


def decode_actions(params: ModelParams, features: Tensor) -> Tensor:
    h = ad.relu(ad.add(ad.matmul(features, params["decoder.l1.w"]),
                       params["decoder.l1.b"]))
    return ad.add(ad.matmul(h, params["decoder.l2.w"]), params["decoder.l2.b"])


def _pairwise_attention_layer(graph: FlatGraph, attn: np.ndarray) -> AttentionLayer:
    edges = np.arange(graph.src.size)
    return AttentionLayer(
        num_nodes=graph.num_nodes,
        head_node=graph.dst.copy(), head_edge=edges,
        node_edge_attn=attn,
        tail_edge=edges.copy(), tail_node=graph.src.copy(),
        edge_tail_attn=np.ones(graph.src.size),
    )


def network_forward(
    params: ModelParams,
    obs: np.ndarray,
    structure: FlatHypergraph | FlatGraph,
) -> tuple[Tensor, AttentionRecord]:
    """Encoder -> L attention layers -> decoder on a prebuilt structure.

    The structure may be a single instance's or the disjoint union of a
    whole minibatch; attention is captured per layer either way.
    """
    features = encode_observation(params, obs)
    layers = []
    for layer in range(params.arch.num_layers):
        if isinstance(structure, FlatGraph):
            features, attn = gat_layer(params, layer, features, structure)
            layers.append(_pairwise_attention_layer(structure, attn["attn"]))
        else:
            features, attn = hgnn_layer(params, layer, features, structure)
            layers.append(AttentionLayer(
                num_nodes=structure.num_nodes,
                head_node=structure.head_node.copy(),
                head_edge=structure.head_edge.copy(),
                node_edge_attn=attn["node_edge_attn"],
                tail_edge=structure.tail_edge.copy(),
                tail_node=structure.tail_node.copy(),
                edge_tail_attn=attn["edge_tail_attn"],
            ))
    logits = decode_actions(params, features)
    return logits, AttentionRecord(tuple(layers))


def build_structure(
    strategy: HypergraphStrategy,
    instance: Instance,
    config: Configuration,
    r_comm: float,
) -> FlatHypergraph | FlatGraph:
    if strategy.kind == "pairwise":
        return build_disk_graph(config, r_comm, strategy.norm)
    hg = strategy.build(instance.grid, config, r_comm)
    return flatten_hypergraph(hg, config)


def policy_forward(
    params: ModelParams,
    instance: Instance,
    config: Configuration,
    strategy: HypergraphStrategy,
    r_obs: int | None = None,
    r_comm: float | None = None,
    dist_fields: list[np.ndarray] | None = None,
    structure: FlatHypergraph | FlatGraph | None = None,
) -> tuple[Tensor, AttentionRecord]:
    """Full pipeline on one instance state: observations are built from the
    configuration, the communication structure from the strategy (unless a
    cached one is passed in), and per-agent action logits come back with
    the attention record."""
    r_obs = params.arch.r_obs if r_obs is None else r_obs
    r_comm = params.arch.r_comm if r_comm is None else r_comm
    obs = observe_all(instance, config, r_obs, dist_fields)
    if structure is None:
        structure = build_structure(strategy, instance, config, r_comm)
    return network_forward(params, obs, structure)
