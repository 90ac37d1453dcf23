from .params import ArchConfig, ModelParams, load_checkpoint, save_checkpoint
from .layers import gat_layer, hgnn_layer
from .policy import (
    AttentionLayer,
    AttentionRecord,
    aggregate_attention,
    decode_actions,
    encode_observation,
    network_forward,
    policy_forward,
)

__all__ = [
    "ArchConfig", "ModelParams", "load_checkpoint", "save_checkpoint",
    "gat_layer", "hgnn_layer", "AttentionLayer", "AttentionRecord",
    "aggregate_attention", "decode_actions", "encode_observation",
    "network_forward", "policy_forward",
]
