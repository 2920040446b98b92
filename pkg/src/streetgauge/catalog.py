"""Street/point/frame catalog: manifest IO, validation, leakage-free splits.

A catalog is loaded from a line-delimited JSON manifest with one object per
frame.  Streets and data points are derived from the frame records; street
diversity attributes come from an optional side file keyed by street_id.
Splits are assigned at data-point granularity so that the frames of one
point can never straddle train/val/test.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

POSITIONS = ("head", "center", "tail")

# The eight diversity-matrix dimensions used to describe study streets.
ATTRIBUTE_DIMENSIONS = (
    "density",
    "socio_economic_status",
    "greenery",
    "land_use",
    "historical_context",
    "urbanization",
    "affordance",
    "space_to_user",
)

FRAMES_PER_POINT = 250
SPLITS = ("train", "val", "test")


class ManifestError(ValueError):
    """Raised when a manifest cannot be parsed into a consistent catalog."""


@dataclass(frozen=True)
class StreetSite:
    street_id: str
    name: str = ""
    attributes: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        for key in self.attributes:
            if key not in ATTRIBUTE_DIMENSIONS:
                raise ValueError(f"unknown street attribute dimension {key!r}")


@dataclass(frozen=True)
class DataPoint:
    point_id: str
    street_id: str
    position: str
    lat: float
    lon: float

    def __post_init__(self):
        if self.position not in POSITIONS:
            raise ValueError(f"position must be one of {POSITIONS}, got {self.position!r}")


@dataclass(frozen=True)
class Frame:
    frame_id: str
    point_id: str
    angle_index: int
    image_path: str
    confmap_path: str | None = None


@dataclass
class Catalog:
    streets: dict[str, StreetSite]
    points: dict[str, DataPoint]
    frames: dict[str, Frame]

    def frames_of_point(self, point_id: str) -> list[Frame]:
        return [f for f in self.frames.values() if f.point_id == point_id]

    def points_of_street(self, street_id: str) -> list[DataPoint]:
        return [p for p in self.points.values() if p.street_id == street_id]


@dataclass
class ValidationReport:
    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def is_clean(self) -> bool:
        return not self.errors and not self.warnings


@dataclass
class SplitAssignment:
    assignment: dict[str, str]  # point_id -> train|val|test
    seed: int
    ratios: tuple[float, float, float]

    def points_in(self, split: str) -> list[str]:
        return [p for p, s in self.assignment.items() if s == split]

    def split_of_frame(self, catalog: Catalog, frame_id: str) -> str:
        return self.assignment[catalog.frames[frame_id].point_id]


_REQUIRED_FIELDS = ("frame_id", "point_id", "street_id", "position", "angle_index", "lat", "lon", "image_path")


def load_manifest(path: str | Path, attributes_path: str | Path | None = None) -> Catalog:
    """Parse a frame manifest (and optional street-attribute file) into a Catalog.

    Raises ManifestError with the offending line number for parse errors,
    duplicate frame ids, missing point references, and fields that disagree
    between frames of the same point.
    """
    path = Path(path)
    streets: dict[str, StreetSite] = {}
    points: dict[str, DataPoint] = {}
    frames: dict[str, Frame] = {}
    angle_seen: dict[str, set[int]] = {}

    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestError(f"{path}:{lineno}: invalid JSON: {exc}") from exc

            missing = [k for k in _REQUIRED_FIELDS if rec.get(k) in (None, "")]
            if "point_id" in missing:
                raise ManifestError(
                    f"{path}:{lineno}: frame {rec.get('frame_id')!r} references no data point"
                )
            if missing:
                raise ManifestError(f"{path}:{lineno}: missing fields {missing}")

            frame_id = str(rec["frame_id"])
            if frame_id in frames:
                raise ManifestError(f"{path}:{lineno}: duplicate frame_id {frame_id!r}")

            point_id = str(rec["point_id"])
            point = DataPoint(
                point_id=point_id,
                street_id=str(rec["street_id"]),
                position=str(rec["position"]),
                lat=float(rec["lat"]),
                lon=float(rec["lon"]),
            )
            if point_id in points:
                if points[point_id] != point:
                    raise ManifestError(
                        f"{path}:{lineno}: frame {frame_id!r} disagrees with earlier"
                        f" records for point {point_id!r}"
                    )
            else:
                points[point_id] = point

            angle = int(rec["angle_index"])
            if not 0 <= angle < FRAMES_PER_POINT:
                raise ManifestError(
                    f"{path}:{lineno}: angle_index {angle} outside 0..{FRAMES_PER_POINT - 1}"
                )
            seen = angle_seen.setdefault(point_id, set())
            if angle in seen:
                raise ManifestError(
                    f"{path}:{lineno}: duplicate angle_index {angle} for point {point_id!r}"
                )
            seen.add(angle)

            streets.setdefault(point.street_id, StreetSite(street_id=point.street_id))
            confmap = rec.get("confmap_path")
            frames[frame_id] = Frame(
                frame_id=frame_id,
                point_id=point_id,
                angle_index=angle,
                image_path=str(rec["image_path"]),
                confmap_path=None if confmap in (None, "") else str(confmap),
            )

    if attributes_path is not None:
        attrs = json.loads(Path(attributes_path).read_text(encoding="utf-8"))
        for street_id, entry in attrs.items():
            name = entry.get("name", "")
            attributes = {k: v for k, v in entry.items() if k != "name"}
            streets[street_id] = StreetSite(street_id=street_id, name=name, attributes=attributes)

    return Catalog(streets=streets, points=points, frames=frames)


def write_manifest(catalog: Catalog, path: str | Path) -> None:
    """Write the frame manifest; load_manifest(write_manifest(c)) == c."""
    path = Path(path)
    lines = []
    for frame in sorted(catalog.frames.values(), key=lambda f: f.frame_id):
        point = catalog.points[frame.point_id]
        lines.append(
            json.dumps(
                {
                    "frame_id": frame.frame_id,
                    "point_id": frame.point_id,
                    "street_id": point.street_id,
                    "position": point.position,
                    "angle_index": frame.angle_index,
                    "lat": point.lat,
                    "lon": point.lon,
                    "image_path": frame.image_path,
                    "confmap_path": frame.confmap_path,
                },
                sort_keys=True,
            )
        )
    path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def validate_catalog(catalog: Catalog) -> ValidationReport:
    """Report incomplete frame sets, missing confmaps and bad coordinates.

    Warnings are tolerable gaps (street-view coverage is uneven in
    practice); errors are records that cannot be correct.
    """
    report = ValidationReport()
    per_point: dict[str, int] = {p: 0 for p in catalog.points}
    for frame in catalog.frames.values():
        per_point[frame.point_id] += 1
        if frame.confmap_path is None:
            report.warnings.append(f"frame {frame.frame_id}: no confidence map")
    for point_id, count in sorted(per_point.items()):
        if count < FRAMES_PER_POINT:
            report.warnings.append(
                f"point {point_id}: incomplete frame set ({count}/{FRAMES_PER_POINT})"
            )
    for point in sorted(catalog.points.values(), key=lambda p: p.point_id):
        if not -90.0 <= point.lat <= 90.0:
            report.errors.append(f"point {point.point_id}: latitude {point.lat} outside [-90, 90]")
        if not -180.0 <= point.lon <= 180.0:
            report.errors.append(
                f"point {point.point_id}: longitude {point.lon} outside [-180, 180]"
            )
    return report


def _largest_remainder_counts(total: int, ratios: tuple[float, float, float]) -> list[int]:
    """Integer split sizes; leftovers go to the earliest split (train first)."""
    exact = [total * r for r in ratios]
    counts = [int(np.floor(x)) for x in exact]
    leftover = total - sum(counts)
    # Ties broken by split order, so train absorbs remainders first.
    order = sorted(range(3), key=lambda i: (-(exact[i] - counts[i]), i))
    for i in range(leftover):
        counts[order[i]] += 1
    return counts


def stratified_split(
    catalog: Catalog, ratios: tuple[float, float, float], seed: int
) -> SplitAssignment:
    """Assign every data point to train/val/test, stratified by street.

    Points are shuffled within each street, streets are interleaved
    round-robin (street order itself shuffled), and the ratio counts are
    applied over the interleaved order.  Deterministic for a given seed.
    """
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or any(r <= 0 for r in ratios):
        raise ValueError("ratios must be three positive fractions")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must sum to 1, got {sum(ratios)}")
    n_points = len(catalog.points)
    if n_points < len(SPLITS):
        raise ValueError(f"need at least {len(SPLITS)} points to split, have {n_points}")

    rng = np.random.default_rng(seed)
    street_ids = sorted({p.street_id for p in catalog.points.values()})
    rng.shuffle(street_ids)
    per_street: list[list[str]] = []
    for street_id in street_ids:
        ids = sorted(p.point_id for p in catalog.points.values() if p.street_id == street_id)
        rng.shuffle(ids)
        per_street.append(ids)

    interleaved: list[str] = []
    round_idx = 0
    while len(interleaved) < n_points:
        for ids in per_street:
            if round_idx < len(ids):
                interleaved.append(ids[round_idx])
        round_idx += 1

    counts = _largest_remainder_counts(n_points, ratios)
    assignment: dict[str, str] = {}
    cursor = 0
    for split, count in zip(SPLITS, counts):
        for point_id in interleaved[cursor : cursor + count]:
            assignment[point_id] = split
        cursor += count
    return SplitAssignment(assignment=assignment, seed=seed, ratios=ratios)


def write_split(split: SplitAssignment, path: str | Path) -> None:
    payload = {
        "seed": split.seed,
        "ratios": list(split.ratios),
        "assignment": dict(sorted(split.assignment.items())),
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_split(path: str | Path) -> SplitAssignment:
    d = json.loads(Path(path).read_text(encoding="utf-8"))
    return SplitAssignment(
        assignment=dict(d["assignment"]), seed=int(d["seed"]), ratios=tuple(d["ratios"])
    )
