"""Checkpoint format: one JSON header line, then a flat float32 payload.

The header records the format version, the model config, and the parameter
count.  The payload is every parameter array raveled and concatenated in
canonical order, written as little-endian float32.  Loading a checkpoint
whose config or payload size disagrees with the header is an error.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from streetgauge.model.config import ModelConfig
from streetgauge.model.params import ModelParams, count_params

FORMAT_NAME = "streetgauge-checkpoint"
FORMAT_VERSION = 1


class CheckpointError(ValueError):
    """Raised for malformed or inconsistent checkpoint files."""


def save_checkpoint(path: str | Path, params: ModelParams, extra: dict | None = None) -> None:
    header = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "config": params.config.to_dict(),
        "param_count": params.count(),
    }
    if extra:
        header["extra"] = extra
    payload = params.flat().astype("<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        fh.write(payload)


def load_checkpoint(path: str | Path) -> tuple[ModelParams, dict]:
    """Read a checkpoint; returns (params, header)."""
    with open(path, "rb") as fh:
        header_line = fh.readline()
        payload = fh.read()
    try:
        header = json.loads(header_line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"unreadable checkpoint header: {exc}") from exc
    if header.get("format") != FORMAT_NAME:
        raise CheckpointError(f"not a model checkpoint: format={header.get('format')!r}")
    if header.get("version") != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {header.get('version')!r}")
    try:
        config = ModelConfig.from_dict(header["config"])
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"bad config in checkpoint header: {exc}") from exc

    expected = count_params(config)
    if header.get("param_count") != expected:
        raise CheckpointError(
            f"header claims {header.get('param_count')} parameters, config implies {expected}"
        )
    values = np.frombuffer(payload, dtype="<f4")
    if values.size != expected:
        raise CheckpointError(f"payload holds {values.size} values, expected {expected}")
    params = ModelParams.from_flat(config, values.astype(np.float64))
    return params, header
