"""Cross-entropy imitation training."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import autodiff as ad
from ..errors import TrainingDivergedError
from ..network import ModelParams, network_forward
from .config import TrainConfig
from .datasets import Dataset, merge_samples
from .optim import AdamW


@dataclass
class EpochStats:
    loss: float
    accuracy: float
    val_accuracy: float | None = None


def _batches(count: int, batch_size: int, rng: np.random.Generator):
    order = rng.permutation(count)
    for start in range(0, count, batch_size):
        yield order[start:start + batch_size]


def il_epoch(
    params: ModelParams,
    optimizer: AdamW,
    dataset: Dataset,
    config: TrainConfig,
    rng: np.random.Generator,
    val_dataset: Dataset | None = None,
) -> EpochStats:
    """One pass of minibatch AdamW steps on the cross-entropy loss.

    Reports the mean training loss, training action accuracy, and held-out
    accuracy when a validation split is supplied. A non-finite loss aborts
    with the learning rate in the diagnostic.
    """
    if not len(dataset):
        raise ValueError("dataset is empty")
    losses, hits, total = [], 0, 0
    for idx in _batches(len(dataset), config.batch_size, rng):
        batch = [dataset.samples[i] for i in idx]
        obs, structure, labels = merge_samples(batch)
        with ad.Tape() as tape:
            logits, _ = network_forward(params, obs, structure)
            loss = ad.cross_entropy_with_logits(logits, labels)
        if not np.isfinite(loss.data):
            raise TrainingDivergedError(
                f"loss became {loss.data} (learning rate {optimizer.lr:g}); "
                "lower the learning rate")
        grads = ad.backward(tape, loss)
        optimizer.step(grads)
        losses.append(float(loss.data))
        hits += int((logits.data.argmax(axis=1) == labels).sum())
        total += len(labels)
    val_acc = evaluate_accuracy(params, val_dataset, config.batch_size) \
        if val_dataset is not None and len(val_dataset) else None
    return EpochStats(float(np.mean(losses)), hits / max(total, 1), val_acc)


def evaluate_accuracy(params: ModelParams, dataset: Dataset,
                      batch_size: int = 64) -> float:
    """Fraction of expert actions the greedy policy reproduces."""
    if not len(dataset):
        return float("nan")
    hits = total = 0
    for start in range(0, len(dataset), batch_size):
        batch = dataset.samples[start:start + batch_size]
        obs, structure, labels = merge_samples(batch)
        logits, _ = network_forward(params, obs, structure)
        hits += int((logits.data.argmax(axis=1) == labels).sum())
        total += len(labels)
    return hits / total
