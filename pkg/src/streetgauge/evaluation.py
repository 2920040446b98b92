"""Model evaluation: R², correlations, permutation importance, summaries."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from streetgauge.model.params import ModelParams
from streetgauge.model.train import predict_batch
from streetgauge.scores import CRITERIA, SCORE_MAX, SCORE_MIN, output_labels
from streetgauge.segmentation import FEATURE_NAMES, N_FEATURES


@dataclass
class R2Report:
    """Coefficient-of-determination summary over a prediction matrix.

    Outputs whose targets have zero variance are undefined (None) and are
    excluded from the pooled overall figure and the per-output mean.
    """

    overall: float
    per_output: dict[str, float | None]
    mean_per_output: float

    def to_json_dict(self) -> dict:
        return {
            "overall": self.overall,
            "mean_per_output": self.mean_per_output,
            "per_output": self.per_output,
        }

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["output", "r2"])
            writer.writerow(["overall", f"{self.overall:.10g}"])
            writer.writerow(["mean_per_output", f"{self.mean_per_output:.10g}"])
            for label, value in self.per_output.items():
                writer.writerow([label, "undefined" if value is None else f"{value:.10g}"])


def r_squared(predictions: np.ndarray, targets: np.ndarray) -> R2Report:
    """R² per output column and pooled over all well-defined columns.

    Residuals in each column are measured against that column's target
    mean.  The pooled overall figure is 1 - sum(SS_res)/sum(SS_tot) over
    the defined columns, so every (sample, output) pair weighs equally.
    """
    preds = np.asarray(predictions, dtype=np.float64)
    targs = np.asarray(targets, dtype=np.float64)
    if preds.shape != targs.shape:
        raise ValueError(f"shape mismatch: {preds.shape} vs {targs.shape}")
    if preds.ndim != 2 or preds.shape[0] < 2:
        raise ValueError("need a 2-D matrix with at least two rows")

    col_means = targs.mean(axis=0)
    ss_res = ((targs - preds) ** 2).sum(axis=0)
    ss_tot = ((targs - col_means) ** 2).sum(axis=0)

    labels = output_labels()
    if preds.shape[1] != len(labels):
        labels = [f"output_{i}" for i in range(preds.shape[1])]

    per_output: dict[str, float | None] = {}
    defined: list[float] = []
    total_res = 0.0
    total_tot = 0.0
    for j, label in enumerate(labels):
        if ss_tot[j] == 0.0:
            per_output[label] = None
            continue
        value = 1.0 - ss_res[j] / ss_tot[j]
        per_output[label] = float(value)
        defined.append(float(value))
        total_res += float(ss_res[j])
        total_tot += float(ss_tot[j])

    if not defined:
        raise ValueError("every output has zero target variance; R² undefined")
    return R2Report(
        overall=1.0 - total_res / total_tot,
        per_output=per_output,
        mean_per_output=float(np.mean(defined)),
    )


def pearson(x: np.ndarray, y: np.ndarray) -> float:
    """Pearson correlation coefficient; raises on zero variance."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("inputs must be 1-D and the same length")
    if x.size < 2:
        raise ValueError("need at least two samples")
    xc = x - x.mean()
    yc = y - y.mean()
    denom = math.sqrt(float((xc**2).sum()) * float((yc**2).sum()))
    if denom == 0.0:
        raise ValueError("zero variance; correlation undefined")
    return float((xc * yc).sum() / denom)


@dataclass
class CorrelationMatrix:
    """Pearson correlations among the four criteria.

    matrix[i][j] is None when either column has zero variance; such pairs
    are listed in undefined_pairs rather than silently zeroed.
    """

    labels: tuple[str, ...]
    matrix: list[list[float | None]]
    undefined_pairs: list[tuple[str, str]] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "labels": list(self.labels),
            "matrix": self.matrix,
            "undefined_pairs": [list(p) for p in self.undefined_pairs],
        }

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["", *self.labels])
            for label, row in zip(self.labels, self.matrix):
                writer.writerow(
                    [label, *("undefined" if v is None else f"{v:.10g}" for v in row)]
                )


def correlation_matrix(point_scores: dict[str, np.ndarray]) -> CorrelationMatrix:
    """4x4 criterion correlation matrix over per-point criterion vectors."""
    if len(point_scores) < 2:
        raise ValueError("need at least two points")
    table = np.asarray(
        [np.asarray(point_scores[pid], dtype=np.float64) for pid in sorted(point_scores)]
    )
    if table.shape[1] != len(CRITERIA):
        raise ValueError(f"expected {len(CRITERIA)} criterion values per point")

    n = len(CRITERIA)
    matrix: list[list[float | None]] = [[None] * n for _ in range(n)]
    undefined: list[tuple[str, str]] = []
    for i in range(n):
        matrix[i][i] = 1.0
        for j in range(i + 1, n):
            try:
                r = pearson(table[:, i], table[:, j])
            except ValueError:
                undefined.append((CRITERIA[i], CRITERIA[j]))
                continue
            matrix[i][j] = r
            matrix[j][i] = r
    return CorrelationMatrix(labels=CRITERIA, matrix=matrix, undefined_pairs=undefined)


@dataclass
class ImportanceReport:
    """Permutation importance of each of the 12 input features."""

    baseline_r2: float
    n_shuffles: int
    seed: int
    mean_delta: dict[str, float] = field(default_factory=dict)
    std_error: dict[str, float] = field(default_factory=dict)

    def ranked(self) -> list[tuple[str, float]]:
        return sorted(self.mean_delta.items(), key=lambda kv: kv[1], reverse=True)

    def to_json_dict(self) -> dict:
        return {
            "baseline_r2": self.baseline_r2,
            "n_shuffles": self.n_shuffles,
            "seed": self.seed,
            "features": {
                name: {
                    "mean_delta_r2": self.mean_delta[name],
                    "std_error": self.std_error[name],
                }
                for name in self.mean_delta
            },
        }

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["feature", "mean_delta_r2", "std_error", "n_shuffles"])
            for name, delta in self.ranked():
                writer.writerow(
                    [name, f"{delta:.10g}", f"{self.std_error[name]:.10g}", self.n_shuffles]
                )


def permutation_importance(
    params: ModelParams,
    sequences: list[np.ndarray],
    targets: np.ndarray,
    n_shuffles: int = 100,
    seed: int = 0,
) -> ImportanceReport:
    """Drop in overall R² when one feature column is shuffled across pixels.

    Every pixel row in the evaluation set shares one global permutation per
    shuffle, so inter-frame structure is destroyed along with intra-frame
    structure.  Shuffle s draws its permutation from a generator seeded
    with seed + s, making each shuffle reproducible independently of
    scheduling.  A constant column is invariant under permutation, so its
    delta is exactly zero.
    """
    if n_shuffles < 1:
        raise ValueError("n_shuffles must be >= 1")
    targets = np.asarray(targets, dtype=np.float64)
    if len(sequences) != targets.shape[0]:
        raise ValueError("one target row per sequence required")

    base_preds, _ = predict_batch(params, sequences, clamp=False)
    baseline = r_squared(base_preds, targets).overall

    lengths = [np.asarray(rows).shape[0] for rows in sequences]
    stacked = np.concatenate([np.asarray(r, dtype=np.float64) for r in sequences], axis=0)
    offsets = np.concatenate([[0], np.cumsum(lengths)])

    report = ImportanceReport(baseline_r2=baseline, n_shuffles=n_shuffles, seed=seed)
    deltas = np.empty((N_FEATURES, n_shuffles))
    for s in range(n_shuffles):
        rng = np.random.default_rng(seed + s)
        perm = rng.permutation(stacked.shape[0])
        for f in range(N_FEATURES):
            shuffled = stacked.copy()
            shuffled[:, f] = stacked[perm, f]
            seqs = [shuffled[offsets[i] : offsets[i + 1]] for i in range(len(sequences))]
            preds, _ = predict_batch(params, seqs, clamp=False)
            deltas[f, s] = baseline - r_squared(preds, targets).overall
    for f, name in enumerate(FEATURE_NAMES):
        report.mean_delta[name] = float(deltas[f].mean())
        report.std_error[name] = float(deltas[f].std(ddof=0) / math.sqrt(n_shuffles))
    return report


def quantile(values: np.ndarray, q: float) -> float:
    """Linear-interpolation quantile (the numpy default scheme)."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("empty sample")
    if not 0.0 <= q <= 1.0:
        raise ValueError("q must lie in [0, 1]")
    ordered = np.sort(values)
    pos = q * (ordered.size - 1)
    lo = int(math.floor(pos))
    hi = int(math.ceil(pos))
    frac = pos - lo
    return float(ordered[lo] * (1.0 - frac) + ordered[hi] * frac)


@dataclass
class DistributionSummary:
    n: int
    mean: float
    sd: float
    minimum: float
    q1: float
    median: float
    q3: float
    maximum: float

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "mean": self.mean,
            "sd": self.sd,
            "min": self.minimum,
            "q1": self.q1,
            "median": self.median,
            "q3": self.q3,
            "max": self.maximum,
        }


def distribution_summary(values: np.ndarray) -> DistributionSummary:
    """Mean, population SD, and five-number summary."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("empty sample")
    return DistributionSummary(
        n=int(values.size),
        mean=float(values.mean()),
        sd=float(values.std(ddof=0)),
        minimum=float(values.min()),
        q1=quantile(values, 0.25),
        median=quantile(values, 0.5),
        q3=quantile(values, 0.75),
        maximum=float(values.max()),
    )


GRADES = ("D", "C", "B", "A")


def grade(score: float) -> str:
    """Letter grade by equal quarters of the score range.

    [1, 1.75) -> D, [1.75, 2.5) -> C, [2.5, 3.25) -> B, [3.25, 4] -> A.
    """
    if not SCORE_MIN <= score <= SCORE_MAX:
        raise ValueError(f"score {score} outside [{SCORE_MIN}, {SCORE_MAX}]")
    span = (SCORE_MAX - SCORE_MIN) / len(GRADES)
    idx = min(int((score - SCORE_MIN) / span), len(GRADES) - 1)
    return GRADES[idx]


def write_json_report(payload: dict, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
