from .config import PpoConfig, TrainConfig
from .datasets import Dataset, Sample, collect_dataset, merge_samples
from .imitation import EpochStats, evaluate_accuracy, il_epoch
from .online import dagger_round, post_train, quality_improvement_round
from .optim import Adam, AdamW
from .temperature import (
    RolloutBuffer,
    collect_temperature_rollouts,
    make_tau_source,
    ppo_update,
    temperature_forward,
)

__all__ = [
    "TrainConfig", "PpoConfig", "Dataset", "Sample", "collect_dataset",
    "merge_samples", "EpochStats", "il_epoch", "evaluate_accuracy",
    "dagger_round", "quality_improvement_round", "post_train",
    "Adam", "AdamW", "temperature_forward", "make_tau_source",
    "RolloutBuffer", "collect_temperature_rollouts", "ppo_update",
]
