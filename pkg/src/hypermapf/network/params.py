"""Model parameters: layout, initialisation, and the checkpoint format.

Checkpoints are self-describing: a JSON header holds the architecture
config plus a manifest of named weight blobs (shape and byte offset),
followed by the raw float64 little-endian data. Round-trips are bit-exact.
"""

from __future__ import annotations

import dataclasses
import json
import struct
from dataclasses import dataclass

import numpy as np

from ..autodiff import Tensor
from ..grid import ACTION_NAMES, NUM_ACTIONS

_MAGIC = b"HMPF"
_VERSION = 1

TEMP_INPUT_DIM = NUM_ACTIONS + 5  # logits, fov agents, fov obstacles, goal dist, dx, dy


@dataclass(frozen=True)
class ArchConfig:
    feature_dim: int = 64
    num_layers: int = 3
    r_obs: int = 5
    r_comm: float = 7.0
    conv_channels: tuple[int, int] = (16, 32)
    edge_mlp_hidden: int = 16
    decoder_hidden: int = 64
    temp_hidden: int = 32
    leaky_slope: float = 0.2
    activation: str = "relu"
    comm_norm: str = "euclidean"
    actions: tuple[str, ...] = ACTION_NAMES

    @property
    def fov_side(self) -> int:
        return 2 * self.r_obs + 1


def _glorot(rng: np.random.Generator, shape: tuple[int, ...],
            fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def _spec(arch: ArchConfig) -> list[tuple[str, tuple[int, ...], tuple[int, int]]]:
    """(name, shape, (fan_in, fan_out)) for every parameter tensor."""
    d = arch.feature_dim
    c1, c2 = arch.conv_channels
    side = arch.fov_side
    hidden = arch.edge_mlp_hidden
    dh = arch.decoder_hidden
    th = arch.temp_hidden
    entries: list[tuple[str, tuple[int, ...], tuple[int, int]]] = [
        ("encoder.conv1.w", (c1, 4, 3, 3), (4 * 9, c1 * 9)),
        ("encoder.conv1.b", (c1,), (1, 1)),
        ("encoder.conv2.w", (c2, c1, 3, 3), (c1 * 9, c2 * 9)),
        ("encoder.conv2.b", (c2,), (1, 1)),
        ("encoder.fc.w", (c2 * side * side, d), (c2 * side * side, d)),
        ("encoder.fc.b", (d,), (1, 1)),
        ("edge_mlp.l1.w", (3, hidden), (3, hidden)),
        ("edge_mlp.l1.b", (hidden,), (1, 1)),
        ("edge_mlp.l2.w", (hidden, d), (hidden, d)),
        ("edge_mlp.l2.b", (d,), (1, 1)),
    ]
    for layer in range(arch.num_layers):
        for part in ("self", "edge_out", "node_msg", "feat_msg",
                     "score_edge", "score_node", "score_feat"):
            entries.append((f"layer{layer}.{part}.w", (d, d), (d, d)))
    entries += [
        ("decoder.l1.w", (d, dh), (d, dh)),
        ("decoder.l1.b", (dh,), (1, 1)),
        ("decoder.l2.w", (dh, NUM_ACTIONS), (dh, NUM_ACTIONS)),
        ("decoder.l2.b", (NUM_ACTIONS,), (1, 1)),
    ]
    for head in ("actor", "critic"):
        entries += [
            (f"temp.{head}.l1.w", (TEMP_INPUT_DIM, th), (TEMP_INPUT_DIM, th)),
            (f"temp.{head}.l1.b", (th,), (1, 1)),
            (f"temp.{head}.l2.w", (th, 1), (th, 1)),
            (f"temp.{head}.l2.b", (1,), (1, 1)),
        ]
    entries.append(("temp.log_std", (1,), (1, 1)))
    return entries


class ModelParams:
    """Named weight tensors plus the architecture they belong to."""

    def __init__(self, arch: ArchConfig, tensors: dict[str, Tensor]):
        self.arch = arch
        self.tensors = dict(tensors)

    def __getitem__(self, name: str) -> Tensor:
        return self.tensors[name]

    def names(self) -> list[str]:
        return list(self.tensors)

    def values(self) -> list[Tensor]:
        return list(self.tensors.values())

    def num_parameters(self) -> int:
        return sum(t.data.size for t in self.tensors.values())

    def copy(self) -> "ModelParams":
        return ModelParams(self.arch,
                           {k: Tensor(v.data.copy()) for k, v in self.tensors.items()})

    def trainable(self, group: str = "policy") -> dict[str, Tensor]:
        """`policy` excludes the temperature module; `temperature` is just it."""
        if group == "policy":
            return {k: v for k, v in self.tensors.items() if not k.startswith("temp.")}
        if group == "temperature":
            return {k: v for k, v in self.tensors.items() if k.startswith("temp.")}
        raise ValueError(f"unknown parameter group {group!r}")

    @staticmethod
    def init(arch: ArchConfig, seed: int = 0) -> "ModelParams":
        rng = np.random.default_rng(seed)
        tensors: dict[str, Tensor] = {}
        for name, shape, (fan_in, fan_out) in _spec(arch):
            if name.endswith(".b"):
                data = np.zeros(shape)
            elif name == "temp.log_std":
                data = np.full(shape, np.log(0.5))
            else:
                data = _glorot(rng, shape, fan_in, fan_out)
            tensors[name] = Tensor(data)
        return ModelParams(arch, tensors)

    @staticmethod
    def zeros(arch: ArchConfig) -> "ModelParams":
        return ModelParams(arch, {name: Tensor(np.zeros(shape))
                                  for name, shape, _ in _spec(arch)})


def save_checkpoint(path, params: ModelParams) -> None:
    arch_dict = dataclasses.asdict(params.arch)
    manifest = []
    offset = 0
    blobs = []
    for name, t in params.tensors.items():
        blob = np.ascontiguousarray(t.data, dtype="<f8").tobytes()
        manifest.append({"name": name, "shape": list(t.data.shape), "offset": offset})
        offset += len(blob)
        blobs.append(blob)
    header = json.dumps({"version": _VERSION, "arch": arch_dict,
                         "tensors": manifest}, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        for blob in blobs:
            fh.write(blob)


def load_checkpoint(path) -> ModelParams:
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise ValueError(f"{path} is not a checkpoint file")
        (header_len,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(header_len).decode())
        body = fh.read()
    if header["version"] != _VERSION:
        raise ValueError(f"unsupported checkpoint version {header['version']}")
    arch_dict = header["arch"]
    for key in ("conv_channels", "actions"):
        arch_dict[key] = tuple(arch_dict[key])
    arch = ArchConfig(**arch_dict)
    tensors: dict[str, Tensor] = {}
    for entry in header["tensors"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = entry["offset"]
        data = np.frombuffer(body, dtype="<f8", count=count, offset=start)
        tensors[entry["name"]] = Tensor(data.reshape(shape).copy())
    return ModelParams(arch, tensors)
