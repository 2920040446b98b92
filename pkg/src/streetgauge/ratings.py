"""Participant ratings: records, aggregation into 28-score targets, statistics.

Individual-stage ratings attach to data points and are averaged within each
demographic group a rater belongs to; intersectional raters contribute to
every group they claim.  Collective-stage ratings carry the session id in
the participant slot and average into the four shared criterion scores.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from streetgauge.catalog import Catalog
from streetgauge.scores import (
    CRITERIA,
    CRITERION_INDEX,
    GROUP_INDEX,
    GROUPS,
    N_CRITERIA,
    N_GROUPS,
    ScoreVector28,
)

STAGES = ("individual", "collective")
VALID_VALUES = (1, 2, 3, 4)


class RatingError(ValueError):
    pass


@dataclass(frozen=True)
class Participant:
    participant_id: str
    groups: frozenset[str]
    facilitator: bool = False

    def __post_init__(self):
        if not self.groups:
            raise RatingError(f"participant {self.participant_id!r} has no groups")
        unknown = [g for g in self.groups if g not in GROUPS]
        if unknown:
            raise RatingError(f"participant {self.participant_id!r}: unknown groups {unknown}")


@dataclass(frozen=True)
class RatingRecord:
    participant_id: str
    point_id: str
    criterion: str
    value: int
    stage: str

    def __post_init__(self):
        if self.criterion not in CRITERIA:
            raise RatingError(f"unknown criterion {self.criterion!r}")
        if self.value not in VALID_VALUES:
            raise RatingError(f"rating value {self.value!r} outside 1..4")
        if self.stage not in STAGES:
            raise RatingError(f"unknown stage {self.stage!r}")


@dataclass(frozen=True)
class RankingRecord:
    session_id: str
    most_inclusive: tuple[str, str, str]
    least_inclusive: tuple[str, str, str]

    def __post_init__(self):
        most, least = set(self.most_inclusive), set(self.least_inclusive)
        if len(self.most_inclusive) != 3 or len(most) != 3:
            raise RatingError("most_inclusive must hold exactly 3 distinct points")
        if len(self.least_inclusive) != 3 or len(least) != 3:
            raise RatingError("least_inclusive must hold exactly 3 distinct points")
        if most & least:
            raise RatingError(f"most/least sets overlap: {sorted(most & least)}")


def aggregate_point_scores(
    records: list[RatingRecord], roster: list[Participant], point_id: str
) -> ScoreVector28:
    """Average one point's ratings into the 28-score layout.

    Cell (g, c) is the mean of individual-stage values over raters who claim
    group g; a rater in k groups feeds k cells per criterion.  Collective
    cells average the collective-stage values.  Unrated cells stay NaN.
    """
    by_id = {p.participant_id: p for p in roster}
    group_sums = np.zeros((N_GROUPS, N_CRITERIA))
    group_counts = np.zeros((N_GROUPS, N_CRITERIA))
    coll_sums = np.zeros(N_CRITERIA)
    coll_counts = np.zeros(N_CRITERIA)

    for rec in records:
        if rec.point_id != point_id:
            continue
        c = CRITERION_INDEX[rec.criterion]
        if rec.stage == "collective":
            coll_sums[c] += rec.value
            coll_counts[c] += 1
            continue
        participant = by_id.get(rec.participant_id)
        if participant is None:
            raise RatingError(f"rating by unknown participant {rec.participant_id!r}")
        for group in participant.groups:
            g = GROUP_INDEX[group]
            group_sums[g, c] += rec.value
            group_counts[g, c] += 1

    with np.errstate(invalid="ignore"):
        group_scores = np.where(group_counts > 0, group_sums / np.maximum(group_counts, 1), np.nan)
        collective = np.where(coll_counts > 0, coll_sums / np.maximum(coll_counts, 1), np.nan)
    return ScoreVector28(group_scores=group_scores, collective_scores=collective)


def aggregate_all_points(
    records: list[RatingRecord], roster: list[Participant]
) -> dict[str, ScoreVector28]:
    return {
        pid: aggregate_point_scores(records, roster, pid)
        for pid in sorted({r.point_id for r in records})
    }


def impute_missing(scores: ScoreVector28) -> tuple[ScoreVector28, list[str]]:
    """Fill NaN group cells so the vector can serve as a training target.

    An unrepresented group borrows the collective score for that criterion;
    if the collective cell is itself empty, the mean of the populated group
    cells for that criterion is used.  Returns the filled vector and the
    labels of imputed cells.
    """
    group = scores.group_scores.copy()
    collective = scores.collective_scores.copy()
    imputed: list[str] = []
    for c, criterion in enumerate(CRITERIA):
        column = group[:, c]
        fallback = collective[c]
        if math.isnan(fallback):
            populated = column[~np.isnan(column)]
            if populated.size == 0:
                continue  # nothing to borrow from; leave NaN for the caller to reject
            fallback = float(populated.mean())
        if math.isnan(collective[c]):
            collective[c] = fallback
            imputed.append(f"collective/{criterion}")
        for g, group_name in enumerate(GROUPS):
            if math.isnan(column[g]):
                group[g, c] = fallback
                imputed.append(f"{group_name}/{criterion}")
    return ScoreVector28(group_scores=group, collective_scores=collective), imputed


def propagate_to_frames(
    point_scores: dict[str, ScoreVector28], catalog: Catalog
) -> dict[str, ScoreVector28]:
    """Copy each scored point's vector onto all of that point's frames."""
    for point_id in point_scores:
        if point_id not in catalog.points:
            raise RatingError(f"scores reference unknown point {point_id!r}")
    out: dict[str, ScoreVector28] = {}
    for frame in catalog.frames.values():
        scores = point_scores.get(frame.point_id)
        if scores is not None:
            out[frame.frame_id] = ScoreVector28(
                group_scores=scores.group_scores.copy(),
                collective_scores=scores.collective_scores.copy(),
            )
    return out


@dataclass
class CriterionStats:
    mean: float | None
    sd: float | None
    n: int


def summary_stats(records: list[RatingRecord], level: str) -> dict[str, CriterionStats]:
    """Per-criterion mean and population SD over records of one stage."""
    if level not in STAGES:
        raise RatingError(f"unknown stage {level!r}")
    out: dict[str, CriterionStats] = {}
    for criterion in CRITERIA:
        values = [r.value for r in records if r.stage == level and r.criterion == criterion]
        if not values:
            out[criterion] = CriterionStats(mean=None, sd=None, n=0)
            continue
        arr = np.asarray(values, dtype=np.float64)
        out[criterion] = CriterionStats(
            mean=float(arr.mean()), sd=float(arr.std(ddof=0)), n=len(values)
        )
    return out


@dataclass
class RankTally:
    most_votes: int = 0
    least_votes: int = 0

    @property
    def net(self) -> int:
        return self.most_votes - self.least_votes


def ranking_tally(rankings: list[RankingRecord]) -> dict[str, RankTally]:
    tally: dict[str, RankTally] = {}
    for rec in rankings:
        for pid in rec.most_inclusive:
            tally.setdefault(pid, RankTally()).most_votes += 1
        for pid in rec.least_inclusive:
            tally.setdefault(pid, RankTally()).least_votes += 1
    return tally


def group_rating_distribution(
    records: list[RatingRecord], roster: list[Participant]
) -> dict[str, dict[str, float]]:
    """Distribution of per-point mean inclusivity ratings, per group.

    For each group, every point rated by at least one member yields the mean
    of those members' individual inclusivity values; the summary is computed
    over these per-point means.
    """
    from streetgauge.evaluation import distribution_summary

    by_id = {p.participant_id: p for p in roster}
    per_group_point: dict[str, dict[str, list[int]]] = {g: {} for g in GROUPS}
    for rec in records:
        if rec.stage != "individual" or rec.criterion != "inclusivity":
            continue
        participant = by_id.get(rec.participant_id)
        if participant is None:
            raise RatingError(f"rating by unknown participant {rec.participant_id!r}")
        for group in participant.groups:
            per_group_point[group].setdefault(rec.point_id, []).append(rec.value)

    out: dict[str, dict[str, float]] = {}
    for group in GROUPS:
        points = per_group_point[group]
        if not points:
            continue
        means = [float(np.mean(vals)) for _, vals in sorted(points.items())]
        out[group] = distribution_summary(means)
    return out


# ---------------------------------------------------------------------------
# File formats: ratings JSONL, roster JSON, aggregated-target JSONL.

def load_roster(path: str | Path) -> list[Participant]:
    entries = json.loads(Path(path).read_text(encoding="utf-8"))
    return [
        Participant(
            participant_id=str(e["participant_id"]),
            groups=frozenset(e["groups"]),
            facilitator=bool(e.get("facilitator", False)),
        )
        for e in entries
    ]


def write_roster(roster: list[Participant], path: str | Path) -> None:
    payload = [
        {
            "participant_id": p.participant_id,
            "groups": sorted(p.groups),
            "facilitator": p.facilitator,
        }
        for p in roster
    ]
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def rating_record_to_dict(rec: RatingRecord) -> dict:
    d = {
        "participant_id": rec.participant_id,
        "point_id": rec.point_id,
        "criterion": rec.criterion,
        "value": rec.value,
        "stage": rec.stage,
    }
    if rec.stage == "collective":
        d["session_id"] = rec.participant_id
    return d


def rating_record_from_dict(d: dict) -> RatingRecord:
    participant = d.get("participant_id")
    if d.get("stage") == "collective" and "session_id" in d:
        participant = d["session_id"]
    return RatingRecord(
        participant_id=str(participant),
        point_id=str(d["point_id"]),
        criterion=str(d["criterion"]),
        value=int(d["value"]),
        stage=str(d["stage"]),
    )


def load_ratings(path: str | Path) -> list[RatingRecord]:
    records = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(rating_record_from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError) as exc:
                raise RatingError(f"{path}:{lineno}: bad rating record: {exc}") from exc
    return records


def write_ratings(records: list[RatingRecord], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rating_record_to_dict(rec), sort_keys=True) + "\n")


def load_targets(path: str | Path) -> dict[str, ScoreVector28]:
    out: dict[str, ScoreVector28] = {}
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            d = json.loads(line)
            out[str(d["point_id"])] = ScoreVector28.from_json_dict(d)
    return out


def write_targets(targets: dict[str, ScoreVector28], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for point_id in sorted(targets):
            fh.write(json.dumps(targets[point_id].to_json_dict(point_id), sort_keys=True) + "\n")
