"""Shared fixtures: tiny model configs and the synthetic sidewalk dataset."""

from __future__ import annotations

import numpy as np
import pytest

from streetgauge.model import ModelConfig, init_model
from streetgauge.segmentation import FEATURE_NAMES

N_FEATURES = len(FEATURE_NAMES)
SIDEWALK_COL = FEATURE_NAMES.index("sidewalk")


@pytest.fixture
def tiny_config() -> ModelConfig:
    """Smallest config that still exercises every layer kind."""
    return ModelConfig(d_model=8, n_heads=2, seed=3)


@pytest.fixture
def tiny_params(tiny_config):
    return init_model(tiny_config)


def make_sidewalk_examples(
    n_frames: int,
    rows_per_frame: int,
    seed: int = 0,
    constant_col: int | None = None,
):
    """Frames whose 28 targets are a linear function of mean sidewalk confidence.

    Every feature is uniform noise except the sidewalk column, which is
    constant within a frame at a level that varies across frames; the target
    for all 28 outputs is 1 + 3 * level.  Optionally one column is pinned to
    0.5 across the whole set so permutation tests can probe a constant input.
    """
    rng = np.random.default_rng(seed)
    examples = []
    levels = np.linspace(0.05, 0.95, n_frames)
    for level in levels:
        rows = rng.random((rows_per_frame, N_FEATURES))
        rows[:, SIDEWALK_COL] = level
        if constant_col is not None:
            rows[:, constant_col] = 0.5
        target = np.full(28, 1.0 + 3.0 * level)
        examples.append((rows, target, None))
    return examples
