"""Model parameters: shapes, initialization, flat serialization order."""

from __future__ import annotations

import numpy as np

from streetgauge.model.config import ModelConfig
from streetgauge.scores import N_OUTPUTS
from streetgauge.segmentation import N_FEATURES

PARAM_BUDGET = 1_000_000


def param_shapes(config: ModelConfig) -> list[tuple[str, tuple[int, ...]]]:
    """Canonical (name, shape) list; fixes checkpoint payload order."""
    d = config.d_model
    shapes: list[tuple[str, tuple[int, ...]]] = [
        ("embed_w", (N_FEATURES, d)),
        ("embed_b", (d,)),
        ("ln_gain", (d,)),
        ("ln_bias", (d,)),
    ]
    for proj in ("q", "k", "v", "o"):
        shapes.append((f"attn_w{proj}", (d, d)))
        shapes.append((f"attn_b{proj}", (d,)))
    for i in range(config.n_pixel_layers):
        shapes.append((f"pixel_fc{i}_w", (d, d)))
        shapes.append((f"pixel_fc{i}_b", (d,)))
    for i in range(config.n_pooled_layers):
        shapes.append((f"pooled_fc{i}_w", (d, d)))
        shapes.append((f"pooled_fc{i}_b", (d,)))
    shapes.append(("head_w", (d, N_OUTPUTS)))
    shapes.append(("head_b", (N_OUTPUTS,)))
    return shapes


class ModelParams:
    """Named float64 weight arrays plus the config that shaped them."""

    def __init__(self, config: ModelConfig, arrays: dict[str, np.ndarray]):
        expected = param_shapes(config)
        for name, shape in expected:
            if name not in arrays:
                raise ValueError(f"missing parameter {name}")
            if arrays[name].shape != shape:
                raise ValueError(
                    f"parameter {name} has shape {arrays[name].shape}, expected {shape}"
                )
        if len(arrays) != len(expected):
            extra = set(arrays) - {n for n, _ in expected}
            raise ValueError(f"unexpected parameters {sorted(extra)}")
        self.config = config
        self.arrays = {name: np.asarray(arrays[name], dtype=np.float64) for name, _ in expected}

    def __getitem__(self, name: str) -> np.ndarray:
        return self.arrays[name]

    def copy(self) -> "ModelParams":
        return ModelParams(self.config, {k: v.copy() for k, v in self.arrays.items()})

    def count(self) -> int:
        return sum(v.size for v in self.arrays.values())

    def flat(self) -> np.ndarray:
        """All parameters concatenated in canonical order."""
        return np.concatenate([self.arrays[name].ravel() for name, _ in param_shapes(self.config)])

    @classmethod
    def from_flat(cls, config: ModelConfig, values: np.ndarray) -> "ModelParams":
        shapes = param_shapes(config)
        total = sum(int(np.prod(s)) for _, s in shapes)
        values = np.asarray(values, dtype=np.float64).ravel()
        if values.size != total:
            raise ValueError(f"expected {total} values, got {values.size}")
        arrays = {}
        offset = 0
        for name, shape in shapes:
            size = int(np.prod(shape))
            arrays[name] = values[offset : offset + size].reshape(shape).copy()
            offset += size
        return cls(config, arrays)


def count_params(config: ModelConfig) -> int:
    return sum(int(np.prod(shape)) for _, shape in param_shapes(config))


def init_model(config: ModelConfig) -> ModelParams:
    """Scaled-uniform weights (bound sqrt(6/(fan_in+fan_out))), zero biases.

    Layer-norm gain starts at one.  Deterministic for a given config seed;
    asserts the sub-million parameter budget.
    """
    rng = np.random.default_rng(config.seed)
    arrays: dict[str, np.ndarray] = {}
    for name, shape in param_shapes(config):
        if name == "ln_gain":
            arrays[name] = np.ones(shape)
        elif len(shape) == 1:
            arrays[name] = np.zeros(shape)
        else:
            fan_in, fan_out = shape
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            arrays[name] = rng.uniform(-bound, bound, size=shape)
    params = ModelParams(config, arrays)
    if params.count() >= PARAM_BUDGET:
        raise ValueError(
            f"config instantiates {params.count()} parameters, over the {PARAM_BUDGET} budget"
        )
    return params
