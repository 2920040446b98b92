"""Model and training configuration."""

from __future__ import annotations

from dataclasses import dataclass, field, asdict


@dataclass
class ModelConfig:
    """Architecture knobs for the per-pixel attention regressor.

    The network counts eleven fully connected layers: the embedding, three
    per-pixel layers, six post-pooling layers and the output head.  The
    attention projections sit beside, not among, those eleven.  When
    n_fc_layers differs from 11 the inner nine are re-split with a third
    (rounded down) before pooling and the rest after.
    """

    d_model: int = 96
    n_heads: int = 6
    n_fc_layers: int = 11
    seq_len_hint: int = 1024
    activation: str = "relu"
    seed: int = 0

    def __post_init__(self):
        if self.d_model % self.n_heads != 0:
            raise ValueError(
                f"d_model={self.d_model} must be divisible by n_heads={self.n_heads}"
            )
        if self.n_fc_layers < 3:
            raise ValueError("n_fc_layers must be at least 3 (embed, hidden, head)")
        if self.activation != "relu":
            raise ValueError(f"unsupported activation {self.activation!r}")
        if self.seq_len_hint < 1:
            raise ValueError("seq_len_hint must be positive")

    @property
    def n_pixel_layers(self) -> int:
        return (self.n_fc_layers - 2) // 3

    @property
    def n_pooled_layers(self) -> int:
        return self.n_fc_layers - 2 - self.n_pixel_layers

    @property
    def head_dim(self) -> int:
        return self.d_model // self.n_heads

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**d)


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 16
    max_epochs: int = 200
    patience: int = 20
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        for name in ("batch_size", "max_epochs", "patience"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        return cls(**d)
