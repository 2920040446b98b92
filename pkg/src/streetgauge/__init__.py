"""Participatory streetscape perception toolkit.

Collects group ratings of street points, extracts pixel features from
street-view imagery and segmentation confidences, trains an attention
regressor that predicts 28 perceptual scores, and reports evaluation
statistics, topic models and map layers on top of those predictions.
"""

from streetgauge.scores import (
    CRITERIA,
    GROUPS,
    N_CRITERIA,
    N_GROUPS,
    N_OUTPUTS,
    SCORE_MAX,
    SCORE_MIN,
    ScoreVector28,
    output_index,
    output_labels,
)

__version__ = "1.0.0"

__all__ = [
    "CRITERIA",
    "GROUPS",
    "N_CRITERIA",
    "N_GROUPS",
    "N_OUTPUTS",
    "SCORE_MAX",
    "SCORE_MIN",
    "ScoreVector28",
    "output_index",
    "output_labels",
    "__version__",
]
