"""Training configuration records."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 30
    batch_size: int = 32
    learning_rate: float = 1e-3
    weight_decay: float = 1e-4
    delta_buf: float = 1.2        # quality-improvement trigger ratio
    h_stride: int = 16            # sub-instance extraction stride
    expert_call_cap: int = 30     # online expert calls per phase
    quality_mix: tuple[int, int] = (1, 3)  # quality : pretrain per batch
    val_split: float = 0.1
    step_limit: int = 256
    dagger_success_threshold: float = 0.8
    post_epochs: int = 20
    checkpoint_every: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.delta_buf <= 1.0:
            raise ValueError("delta_buf must exceed 1")
        if self.h_stride < 1:
            raise ValueError("h_stride must be >= 1")
        if min(self.quality_mix) <= 0:
            raise ValueError("quality_mix components must be positive")
        if not 0.0 <= self.val_split < 1.0:
            raise ValueError("val_split must lie in [0, 1)")


@dataclass(frozen=True)
class PpoConfig:
    clip_ratio: float = 0.2
    discount: float = 0.99
    gae_lambda: float = 0.95
    learning_rate: float = 3e-4
    batch_size: int = 64
    epochs: int = 50

    def __post_init__(self):
        if not 0.0 < self.clip_ratio < 1.0:
            raise ValueError("clip_ratio must lie in (0, 1)")
        for name in ("discount", "gae_lambda"):
            value = getattr(self, name)
            if not 0.0 < value <= 1.0:
                raise ValueError(f"{name} must lie in (0, 1]")
