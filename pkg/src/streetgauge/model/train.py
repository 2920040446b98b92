"""Adam training loop with early stopping on validation loss."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from streetgauge.model.config import ModelConfig, TrainConfig
from streetgauge.model.net import forward, gradients, loss_mse
from streetgauge.model.params import ModelParams, init_model
from streetgauge.scores import N_OUTPUTS, SCORE_MAX, SCORE_MIN


class TrainingDiverged(RuntimeError):
    """Raised when the loss becomes non-finite."""


Example = tuple[np.ndarray, np.ndarray, np.ndarray | None]


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float


@dataclass
class TrainHistory:
    records: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = -1
    best_val_loss: float = math.inf
    stopped_early: bool = False

    def append(self, record: EpochRecord) -> None:
        self.records.append(record)

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch", "train_loss", "val_loss"])
            for rec in self.records:
                writer.writerow([rec.epoch, f"{rec.train_loss:.10g}", f"{rec.val_loss:.10g}"])


class AdamState:
    """First/second moment accumulators, one pair per parameter array."""

    def __init__(self, params: ModelParams):
        self.m = {k: np.zeros_like(v) for k, v in params.arrays.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.arrays.items()}
        self.t = 0

    def step(self, params: ModelParams, grads: dict[str, np.ndarray], cfg: TrainConfig) -> None:
        self.t += 1
        bc1 = 1.0 - cfg.beta1**self.t
        bc2 = 1.0 - cfg.beta2**self.t
        for name, g in grads.items():
            m = self.m[name]
            v = self.v[name]
            m *= cfg.beta1
            m += (1.0 - cfg.beta1) * g
            v *= cfg.beta2
            v += (1.0 - cfg.beta2) * g * g
            params.arrays[name] -= cfg.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + cfg.eps)


def dataset_loss(params: ModelParams, examples: list[Example]) -> float:
    """Mean per-example masked MSE without touching gradients."""
    if not examples:
        raise ValueError("examples must be non-empty")
    total = 0.0
    for rows, target, mask in examples:
        pred = forward(params, rows)
        total += loss_mse(pred, target, mask)
    return total / len(examples)


def train(
    train_examples: list[Example],
    val_examples: list[Example],
    model_config: ModelConfig | None = None,
    train_config: TrainConfig | None = None,
    progress: "callable | None" = None,
) -> tuple[ModelParams, TrainHistory]:
    """Fit the network; returns the best-validation parameters and history.

    Batching order is reshuffled every epoch from a generator seeded by the
    training config, so runs are reproducible end to end.
    """
    model_config = model_config or ModelConfig()
    train_config = train_config or TrainConfig()
    if not train_examples:
        raise ValueError("no training examples")
    if not val_examples:
        raise ValueError("no validation examples")

    params = init_model(model_config)
    best_params = params.copy()
    adam = AdamState(params)
    history = TrainHistory()
    rng = np.random.default_rng(train_config.seed)
    epochs_since_best = 0

    for epoch in range(1, train_config.max_epochs + 1):
        order = rng.permutation(len(train_examples))
        epoch_loss = 0.0
        n_batches = 0
        for start in range(0, len(order), train_config.batch_size):
            batch = [train_examples[i] for i in order[start : start + train_config.batch_size]]
            loss, grads = gradients(params, batch)
            if not math.isfinite(loss):
                raise TrainingDiverged(f"non-finite loss at epoch {epoch}")
            adam.step(params, grads, train_config)
            epoch_loss += loss
            n_batches += 1
        train_loss = epoch_loss / n_batches
        val_loss = dataset_loss(params, val_examples)
        if not math.isfinite(val_loss):
            raise TrainingDiverged(f"non-finite validation loss at epoch {epoch}")
        history.append(EpochRecord(epoch=epoch, train_loss=train_loss, val_loss=val_loss))
        if progress is not None:
            progress(epoch, train_loss, val_loss)

        if val_loss < history.best_val_loss:
            history.best_val_loss = val_loss
            history.best_epoch = epoch
            best_params = params.copy()
            epochs_since_best = 0
        else:
            epochs_since_best += 1
            if epochs_since_best >= train_config.patience:
                history.stopped_early = True
                break

    return best_params, history


def predict_batch(
    params: ModelParams, sequences: list[np.ndarray], clamp: bool = True
) -> tuple[np.ndarray, np.ndarray]:
    """Predict 28-vectors for each sequence.

    Returns (predictions [n, 28], clamped_flags [n]).  When clamp is set,
    outputs are clipped into the valid score range and the flag records
    whether any coordinate needed clipping.
    """
    preds = np.empty((len(sequences), N_OUTPUTS), dtype=np.float64)
    flags = np.zeros(len(sequences), dtype=bool)
    for i, rows in enumerate(sequences):
        y = forward(params, rows)
        if clamp:
            clipped = np.clip(y, SCORE_MIN, SCORE_MAX)
            flags[i] = bool(np.any(clipped != y))
            y = clipped
        preds[i] = y
    return preds, flags
