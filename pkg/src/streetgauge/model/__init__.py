"""Attention-based multi-output score regressor, written on numpy alone."""

from streetgauge.model.checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from streetgauge.model.config import ModelConfig, TrainConfig
from streetgauge.model.net import forward, gradients, loss_mse
from streetgauge.model.params import (
    PARAM_BUDGET,
    ModelParams,
    count_params,
    init_model,
    param_shapes,
)
from streetgauge.model.train import (
    TrainHistory,
    TrainingDiverged,
    dataset_loss,
    predict_batch,
    train,
)

__all__ = [
    "PARAM_BUDGET",
    "CheckpointError",
    "ModelConfig",
    "ModelParams",
    "TrainConfig",
    "TrainHistory",
    "TrainingDiverged",
    "count_params",
    "dataset_loss",
    "forward",
    "gradients",
    "init_model",
    "load_checkpoint",
    "loss_mse",
    "param_shapes",
    "predict_batch",
    "save_checkpoint",
    "train",
]
