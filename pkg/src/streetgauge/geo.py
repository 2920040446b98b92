"""Street-segment / grid-cell score aggregation and GeoJSON export."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from streetgauge.catalog import Catalog
from streetgauge.evaluation import grade
from streetgauge.scores import CRITERIA, GROUPS, SCORE_MAX, SCORE_MIN, output_index

EARTH_RADIUS_M = 6_371_000.0
DEFAULT_RADIUS_M = 30.0


class GeoError(ValueError):
    """Raised for malformed segment maps or inconsistent layer inputs."""


@dataclass(frozen=True)
class SegmentDef:
    """A named street segment: a polyline plus optional explicit members."""

    segment_id: str
    geometry: tuple[tuple[float, float], ...] = ()  # (lat, lon) vertices
    frame_ids: frozenset[str] = frozenset()

    def __post_init__(self):
        if self.geometry and len(self.geometry) < 2:
            raise GeoError(f"segment {self.segment_id!r} needs >= 2 vertices, got 1")
        if not self.geometry and not self.frame_ids:
            raise GeoError(f"segment {self.segment_id!r} has neither geometry nor members")


@dataclass(frozen=True)
class GridSpec:
    """Uniform lat/lon grid anchored at an origin corner."""

    cell_size_deg: float
    origin: tuple[float, float] = (0.0, 0.0)  # (lat, lon)

    def __post_init__(self):
        if not self.cell_size_deg > 0:
            raise GeoError(f"cell size must be positive, got {self.cell_size_deg}")

    def cell_of(self, lat: float, lon: float) -> tuple[int, int]:
        return (
            math.floor((lat - self.origin[0]) / self.cell_size_deg),
            math.floor((lon - self.origin[1]) / self.cell_size_deg),
        )

    def cell_ring(self, cell: tuple[int, int]) -> list[list[float]]:
        """Closed 5-vertex exterior ring for one cell, [lon, lat] order."""
        lat0 = self.origin[0] + cell[0] * self.cell_size_deg
        lon0 = self.origin[1] + cell[1] * self.cell_size_deg
        lat1 = lat0 + self.cell_size_deg
        lon1 = lon0 + self.cell_size_deg
        return [[lon0, lat0], [lon1, lat0], [lon1, lat1], [lon0, lat1], [lon0, lat0]]


def haversine_m(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """Great-circle distance in metres."""
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dp = p2 - p1
    dl = math.radians(lon2 - lon1)
    a = math.sin(dp / 2.0) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * math.asin(math.sqrt(a))


def point_segment_distance_m(
    lat: float, lon: float, a: tuple[float, float], b: tuple[float, float]
) -> float:
    """Distance from a point to one polyline edge.

    The perpendicular foot is found in a local equirectangular projection
    centred on the query point; the returned distance is the haversine
    distance to that foot (or to the nearer endpoint when the foot falls
    outside the edge).
    """
    coslat = math.cos(math.radians(lat))
    ax = (a[1] - lon) * coslat
    ay = a[0] - lat
    bx = (b[1] - lon) * coslat
    by = b[0] - lat
    dx, dy = bx - ax, by - ay
    seg_sq = dx * dx + dy * dy
    if seg_sq == 0.0:
        return haversine_m(lat, lon, a[0], a[1])
    t = -(ax * dx + ay * dy) / seg_sq
    t = min(1.0, max(0.0, t))
    foot_lat = a[0] + t * (b[0] - a[0])
    foot_lon = a[1] + t * (b[1] - a[1])
    return haversine_m(lat, lon, foot_lat, foot_lon)


def point_polyline_distance_m(lat: float, lon: float, geometry) -> float:
    """Minimum distance over all edges of a polyline."""
    return min(
        point_segment_distance_m(lat, lon, geometry[i], geometry[i + 1])
        for i in range(len(geometry) - 1)
    )


Bucket = "str | tuple[int, int]"


@dataclass
class AssignmentResult:
    """frame_id -> bucket mapping plus the frames no bucket claimed."""

    assignment: dict[str, object] = field(default_factory=dict)
    unassigned: list[str] = field(default_factory=list)


def assign_frames(
    catalog: Catalog,
    layout: list[SegmentDef] | GridSpec,
    radius_m: float = DEFAULT_RADIUS_M,
    frame_ids: list[str] | None = None,
) -> AssignmentResult:
    """Bucket each frame by explicit membership, proximity, or grid cell.

    Explicit segment membership wins; remaining frames go to the nearest
    segment polyline within radius_m, or to their grid cell under a
    GridSpec.  Frames matching nothing are reported as unassigned.
    """
    if frame_ids is None:
        ids = sorted(catalog.frames)
    else:
        ids = list(frame_ids)
        unknown = [f for f in ids if f not in catalog.frames]
        if unknown:
            raise GeoError(f"frame ids not in catalog: {unknown[:5]}")
    result = AssignmentResult()

    if isinstance(layout, GridSpec):
        for fid in ids:
            frame = catalog.frames[fid]
            point = catalog.points[frame.point_id]
            result.assignment[fid] = layout.cell_of(point.lat, point.lon)
        return result

    explicit: dict[str, str] = {}
    for seg in layout:
        for fid in seg.frame_ids:
            explicit[fid] = seg.segment_id
    with_geometry = [s for s in layout if s.geometry]

    for fid in ids:
        if fid in explicit:
            result.assignment[fid] = explicit[fid]
            continue
        frame = catalog.frames[fid]
        point = catalog.points[frame.point_id]
        best_id, best_d = None, math.inf
        for seg in with_geometry:
            d = point_polyline_distance_m(point.lat, point.lon, seg.geometry)
            if d < best_d:
                best_id, best_d = seg.segment_id, d
        if best_id is not None and best_d <= radius_m:
            result.assignment[fid] = best_id
        else:
            result.unassigned.append(fid)
    return result


@dataclass
class HeatmapCell:
    bucket: object  # segment_id string or (row, col) grid tuple
    score: float
    n_images: int


@dataclass
class HeatmapLayer:
    criterion: str
    group: str  # demographic group name or "collective"
    cells: list[HeatmapCell] = field(default_factory=list)


def aggregate_layer(
    preds: dict[str, np.ndarray],
    assignment: AssignmentResult,
    criterion: str,
    group: str,
    group_weights: dict[str, float] | None = None,
) -> HeatmapLayer:
    """Average one (group, criterion) channel per bucket, clamped to [1,4].

    group_weights, when given, blends the criterion channel across several
    groups with convex weights instead of selecting one group's channel.
    """
    if group_weights is not None:
        total = sum(group_weights.values())
        if not math.isclose(total, 1.0, rel_tol=0, abs_tol=1e-9):
            raise GeoError(f"group weights must sum to 1, got {total}")
        if any(w < 0 for w in group_weights.values()):
            raise GeoError("group weights must be non-negative")
        channels = {output_index(g, criterion): w for g, w in group_weights.items()}
    else:
        channels = {output_index(group, criterion): 1.0}

    sums: dict[object, float] = {}
    counts: dict[object, int] = {}
    for fid, vec in preds.items():
        bucket = assignment.assignment.get(fid)
        if bucket is None:
            continue
        value = sum(w * float(vec[idx]) for idx, w in channels.items())
        sums[bucket] = sums.get(bucket, 0.0) + value
        counts[bucket] = counts.get(bucket, 0) + 1

    layer = HeatmapLayer(criterion=criterion, group=group)
    for bucket in sorted(sums, key=repr):
        mean = sums[bucket] / counts[bucket]
        clamped = min(max(mean, SCORE_MIN), SCORE_MAX)
        layer.cells.append(HeatmapCell(bucket=bucket, score=clamped, n_images=counts[bucket]))
    return layer


def export_geojson(
    layer: HeatmapLayer, layout: list[SegmentDef] | GridSpec, path: str | Path
) -> None:
    """Write one layer as an RFC 7946 FeatureCollection.

    Segments become LineStrings, grid cells become Polygons with closed
    rings; coordinates are [lon, lat].
    """
    if not layer.cells:
        raise GeoError("refusing to export an empty layer")
    features = []
    seg_by_id = (
        {} if isinstance(layout, GridSpec) else {s.segment_id: s for s in layout}
    )
    for cell in layer.cells:
        props = {
            "criterion": layer.criterion,
            "group": layer.group,
            "score": cell.score,
            "grade": grade(cell.score),
            "n_images": cell.n_images,
        }
        if isinstance(layout, GridSpec):
            props["cell"] = list(cell.bucket)
            geometry = {"type": "Polygon", "coordinates": [layout.cell_ring(cell.bucket)]}
        else:
            seg = seg_by_id.get(cell.bucket)
            if seg is None:
                raise GeoError(f"layer references unknown segment {cell.bucket!r}")
            if not seg.geometry:
                raise GeoError(f"segment {cell.bucket!r} has no geometry to export")
            props["segment_id"] = seg.segment_id
            geometry = {
                "type": "LineString",
                "coordinates": [[lon, lat] for lat, lon in seg.geometry],
            }
        features.append({"type": "Feature", "geometry": geometry, "properties": props})
    collection = {"type": "FeatureCollection", "features": features}
    with open(path, "w") as fh:
        json.dump(collection, fh, indent=2, sort_keys=True)
        fh.write("\n")


def heatmap_filename(group: str, criterion: str) -> str:
    if group not in valid_groups():
        raise GeoError(f"unknown group {group!r}")
    if criterion not in CRITERIA:
        raise GeoError(f"unknown criterion {criterion!r}")
    return f"heatmap_{group}_{criterion}.geojson"


def load_segment_map(path: str | Path) -> list[SegmentDef]:
    """Read a line-delimited JSON segment map.

    Each line: {"segment_id": ..., "coordinates": [[lon, lat], ...],
    "frame_ids": [...]} with coordinates and frame_ids each optional.
    """
    segments: list[SegmentDef] = []
    seen: set[str] = set()
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise GeoError(f"line {lineno}: invalid JSON: {exc}") from exc
            if "segment_id" not in obj:
                raise GeoError(f"line {lineno}: missing segment_id")
            sid = str(obj["segment_id"])
            if sid in seen:
                raise GeoError(f"line {lineno}: duplicate segment_id {sid!r}")
            seen.add(sid)
            coords = obj.get("coordinates") or []
            try:
                geometry = tuple((float(lat), float(lon)) for lon, lat in coords)
            except (TypeError, ValueError) as exc:
                raise GeoError(f"line {lineno}: bad coordinates: {exc}") from exc
            frame_ids = frozenset(str(f) for f in obj.get("frame_ids") or [])
            try:
                segments.append(
                    SegmentDef(segment_id=sid, geometry=geometry, frame_ids=frame_ids)
                )
            except GeoError as exc:
                raise GeoError(f"line {lineno}: {exc}") from exc
    return segments


def valid_groups() -> tuple[str, ...]:
    """Group names accepted by the heatmap layer selector."""
    return GROUPS + ("collective",)
