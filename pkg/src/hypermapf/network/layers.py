"""Message-passing layers.

The hypergraph layer sends messages tail -> hyperedge -> head: tail members
are attention-averaged into a hyperedge representation (queried by the mean
of the head features), and each head node attention-averages its incident
hyperedge representations next to a learned self term. The pairwise layer
is the same machinery on a disk graph with self-loops, one neighbour per
"edge", and is the baseline the dilution analyses compare against.
"""

from __future__ import annotations

import numpy as np

from .. import autodiff as ad
from ..autodiff import Tensor
from ..hypergraphs import FlatGraph, FlatHypergraph
from .params import ModelParams


def _activation(params: ModelParams, t: Tensor) -> Tensor:
    kind = params.arch.activation
    if kind == "relu":
        return ad.relu(t)
    if kind == "tanh":
        return ad.tanh(t)
    raise ValueError(f"unknown activation {kind!r}")


def edge_geometry_embedding(params: ModelParams, geometry: np.ndarray) -> Tensor:
    """Two-layer MLP lifting (dx, dy, manhattan) rows to feature vectors."""
    g = Tensor(np.asarray(geometry, dtype=float))
    h = ad.relu(ad.add(ad.matmul(g, params["edge_mlp.l1.w"]), params["edge_mlp.l1.b"]))
    return ad.add(ad.matmul(h, params["edge_mlp.l2.w"]), params["edge_mlp.l2.b"])


def hgnn_layer(
    params: ModelParams,
    layer: int,
    features: Tensor,
    flat: FlatHypergraph,
) -> tuple[Tensor, dict[str, np.ndarray]]:
    """One hypergraph attention layer.

    Returns the updated node features and the layer's attention arrays:
    `edge_tail_attn[p]` weights tail entry p within its hyperedge and
    `node_edge_attn[q]` weights head incidence q among the node's incident
    hyperedges. Nodes without any incident head hyperedge keep only their
    transformed self term.
    """
    slope = params.arch.leaky_slope
    w = lambda part: params[f"layer{layer}.{part}.w"]
    self_term = ad.matmul(features, w("self"))
    n = flat.num_nodes

    if flat.tail_node.size == 0:
        empty = np.zeros(0)
        return _activation(params, self_term), {
            "edge_tail_attn": empty, "node_edge_attn": empty}

    geom = edge_geometry_embedding(params, flat.tail_geometry)  # (P, d)
    tail_x = ad.take(features, flat.tail_node)                  # (P, d)

    # Hyperedge query: mean of the head features of each hyperedge.
    head_x = ad.take(features, flat.head_node)
    head_sum = ad.segment_sum(head_x, flat.head_edge, flat.num_edges)
    head_count = np.bincount(flat.head_edge, minlength=flat.num_edges)
    inv = Tensor(1.0 / np.maximum(head_count, 1)[:, None])
    query = ad.mul(head_sum, inv)                               # (m, d)

    # Attention of each tail member within its hyperedge.
    score_vec = ad.add(ad.matmul(tail_x, w("score_node")),
                       ad.matmul(geom, w("score_feat")))
    scores = ad.tsum(ad.mul(ad.take(query, flat.tail_edge), score_vec), axis=1)
    edge_tail_attn = ad.segment_softmax(ad.leaky_relu(scores, slope), flat.tail_edge)

    # Hyperedge representation: attention-weighted tail messages.
    msg = ad.add(ad.matmul(tail_x, w("node_msg")), ad.matmul(geom, w("feat_msg")))
    weighted = ad.mul(ad.reshape(edge_tail_attn, (-1, 1)), msg)
    edge_repr = ad.segment_sum(weighted, flat.tail_edge, flat.num_edges)  # (m, d)

    # Attention of each node over its incident head hyperedges.
    incident = ad.take(edge_repr, flat.head_edge)               # (Q, d)
    node_x = ad.take(features, flat.head_node)
    head_scores = ad.tsum(ad.mul(node_x, ad.matmul(incident, w("score_edge"))), axis=1)
    node_edge_attn = ad.segment_softmax(ad.leaky_relu(head_scores, slope),
                                        flat.head_node)

    lifted = ad.matmul(incident, w("edge_out"))
    gathered = ad.mul(ad.reshape(node_edge_attn, (-1, 1)), lifted)
    aggregate = ad.segment_sum(gathered, flat.head_node, n)

    out = _activation(params, ad.add(self_term, aggregate))
    return out, {"edge_tail_attn": edge_tail_attn.data.copy(),
                 "node_edge_attn": node_edge_attn.data.copy()}


def gat_layer(
    params: ModelParams,
    layer: int,
    features: Tensor,
    graph: FlatGraph,
) -> tuple[Tensor, dict[str, np.ndarray]]:
    """One pairwise attention layer over the disk graph (self-loops
    included). Attention normalises over each node's in-neighbours, so
    every added neighbour shrinks all existing weights of that node."""
    slope = params.arch.leaky_slope
    w = lambda part: params[f"layer{layer}.{part}.w"]
    self_term = ad.matmul(features, w("self"))
    if graph.src.size == 0:
        return _activation(params, self_term), {"attn": np.zeros(0)}

    geom = edge_geometry_embedding(params, graph.geometry)
    src_x = ad.take(features, graph.src)
    dst_x = ad.take(features, graph.dst)

    score_vec = ad.add(ad.matmul(src_x, w("score_node")),
                       ad.matmul(geom, w("score_feat")))
    scores = ad.tsum(ad.mul(dst_x, score_vec), axis=1)
    attn = ad.segment_softmax(ad.leaky_relu(scores, slope), graph.dst)

    msg = ad.add(ad.matmul(src_x, w("node_msg")), ad.matmul(geom, w("feat_msg")))
    lifted = ad.matmul(msg, w("edge_out"))
    weighted = ad.mul(ad.reshape(attn, (-1, 1)), lifted)
    aggregate = ad.segment_sum(weighted, graph.dst, graph.num_nodes)

    out = _activation(params, ad.add(self_term, aggregate))
    return out, {"attn": attn.data.copy()}
