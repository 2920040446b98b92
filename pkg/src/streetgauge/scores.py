"""Core scoring vocabulary: criteria, demographic groups, 28-score vectors.

Everything downstream (rating aggregation, model outputs, evaluation
reports, heatmap layers) shares the ordering defined here.  The flat
28-slot layout is group-major: six groups of four criterion scores,
followed by the four collective criterion scores.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Fixed orders.  Do not reorder: the model head, checkpoint payloads and
# report files all index into these.
CRITERIA: tuple[str, ...] = ("inclusivity", "aesthetics", "practicality", "accessibility")

GROUPS: tuple[str, ...] = (
    "lgbtq2plus",
    "mobility_impaired",
    "elderly_female",
    "elderly_male",
    "young_female",
    "young_male",
)

N_CRITERIA = len(CRITERIA)
N_GROUPS = len(GROUPS)
N_OUTPUTS = N_GROUPS * N_CRITERIA + N_CRITERIA  # 28

SCORE_MIN = 1.0
SCORE_MAX = 4.0

CRITERION_INDEX = {name: i for i, name in enumerate(CRITERIA)}
GROUP_INDEX = {name: i for i, name in enumerate(GROUPS)}


def output_labels() -> list[str]:
    """Labels for the 28 output slots, in canonical order."""
    labels = [f"{g}/{c}" for g in GROUPS for c in CRITERIA]
    labels += [f"collective/{c}" for c in CRITERIA]
    return labels


def output_index(group: str, criterion: str) -> int:
    """Flat slot index for a (group, criterion) pair; group='collective' for the shared scores."""
    c = CRITERION_INDEX[criterion]
    if group == "collective":
        return N_GROUPS * N_CRITERIA + c
    return GROUP_INDEX[group] * N_CRITERIA + c


@dataclass
class ScoreVector28:
    """Six groups x four criteria plus four collective scores, all on the 1-4 scale.

    Cells with no contributing rating are NaN and must be imputed before
    being used as a training target.
    """

    group_scores: np.ndarray = field(
        default_factory=lambda: np.full((N_GROUPS, N_CRITERIA), np.nan)
    )
    collective_scores: np.ndarray = field(default_factory=lambda: np.full(N_CRITERIA, np.nan))

    def __post_init__(self):
        self.group_scores = np.asarray(self.group_scores, dtype=np.float64)
        self.collective_scores = np.asarray(self.collective_scores, dtype=np.float64)
        if self.group_scores.shape != (N_GROUPS, N_CRITERIA):
            raise ValueError(f"group_scores must be {N_GROUPS}x{N_CRITERIA}")
        if self.collective_scores.shape != (N_CRITERIA,):
            raise ValueError(f"collective_scores must have {N_CRITERIA} entries")
        for v in self.flatten():
            if not math.isnan(v) and not (SCORE_MIN <= v <= SCORE_MAX):
                raise ValueError(f"score {v} outside [{SCORE_MIN}, {SCORE_MAX}]")

    def flatten(self) -> np.ndarray:
        """Flat 28-vector in canonical order (copy)."""
        return np.concatenate([self.group_scores.ravel(), self.collective_scores])

    @classmethod
    def from_flat(cls, values) -> "ScoreVector28":
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (N_OUTPUTS,):
            raise ValueError(f"expected {N_OUTPUTS} values, got {values.shape}")
        return cls(
            group_scores=values[: N_GROUPS * N_CRITERIA].reshape(N_GROUPS, N_CRITERIA).copy(),
            collective_scores=values[N_GROUPS * N_CRITERIA :].copy(),
        )

    def mask(self) -> np.ndarray:
        """Boolean mask of populated (non-NaN) slots."""
        return ~np.isnan(self.flatten())

    def to_json_dict(self, point_id: str | None = None) -> dict:
        def cell(v: float):
            return None if math.isnan(v) else v

        d = {
            "group_scores": [[cell(v) for v in row] for row in self.group_scores],
            "collective_scores": [cell(v) for v in self.collective_scores],
        }
        if point_id is not None:
            d = {"point_id": point_id, **d}
        return d

    @classmethod
    def from_json_dict(cls, d: dict) -> "ScoreVector28":
        def cell(v):
            return np.nan if v is None else float(v)

        return cls(
            group_scores=np.array([[cell(v) for v in row] for row in d["group_scores"]]),
            collective_scores=np.array([cell(v) for v in d["collective_scores"]]),
        )
