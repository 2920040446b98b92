"""Distances, frame-to-bucket assignment, and GeoJSON heatmap export."""

import json
import math

import numpy as np
import pytest

from streetgauge.catalog import Catalog, DataPoint, Frame, StreetSite
from streetgauge.evaluation import grade
from streetgauge.geo import (
    EARTH_RADIUS_M,
    GeoError,
    GridSpec,
    SegmentDef,
    aggregate_layer,
    assign_frames,
    export_geojson,
    haversine_m,
    heatmap_filename,
    load_segment_map,
    point_polyline_distance_m,
    point_segment_distance_m,
    valid_groups,
)
from streetgauge.scores import GROUPS, output_index


def catalog_with_points(coords: dict[str, tuple[float, float]]) -> Catalog:
    points = {
        pid: DataPoint(pid, "s", "head", lat, lon) for pid, (lat, lon) in coords.items()
    }
    frames = {
        f"frame_{pid}": Frame(f"frame_{pid}", pid, 0, f"{pid}.png") for pid in coords
    }
    return Catalog(streets={"s": StreetSite(street_id="s")}, points=points, frames=frames)


# ------------------------------------------------------------- distances


def test_haversine_against_scalar_formula():
    rng = np.random.default_rng(0)
    for _ in range(200):
        lat1, lat2 = rng.uniform(-80, 80, 2)
        lon1, lon2 = rng.uniform(-179, 179, 2)
        p1, p2 = math.radians(lat1), math.radians(lat2)
        dphi = math.radians(lat2 - lat1)
        dlmb = math.radians(lon2 - lon1)
        a = math.sin(dphi / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dlmb / 2) ** 2
        want = 2 * EARTH_RADIUS_M * math.asin(math.sqrt(a))
        assert haversine_m(lat1, lon1, lat2, lon2) == pytest.approx(want, rel=1e-12)


def test_haversine_known_distance():
    # one degree of latitude is R * pi/180
    want = EARTH_RADIUS_M * math.pi / 180.0
    assert haversine_m(45.0, -73.0, 46.0, -73.0) == pytest.approx(want, rel=1e-9)
    assert haversine_m(12.0, 7.0, 12.0, 7.0) == 0.0


def test_point_segment_distance_vertex_and_perpendicular_cases():
    a = (45.0, -73.0)
    b = (45.0, -72.99)  # ~786 m east
    # on a vertex: zero
    assert point_segment_distance_m(*a, a, b) == pytest.approx(0.0, abs=1e-9)
    assert point_segment_distance_m(*b, a, b) == pytest.approx(0.0, abs=1e-9)
    # beyond the east endpoint: distance to that endpoint
    c = (45.0, -72.98)
    assert point_segment_distance_m(*c, a, b) == pytest.approx(
        haversine_m(*c, *b), rel=1e-6
    )
    # directly north of the midpoint: perpendicular foot
    mid = (45.0001, -72.995)
    want = haversine_m(mid[0], mid[1], 45.0, -72.995)
    assert point_segment_distance_m(*mid, a, b) == pytest.approx(want, rel=1e-4)


def test_polyline_distance_takes_nearest_leg():
    geometry = [(45.0, -73.0), (45.0, -72.99), (45.01, -72.99)]
    near_second_leg = (45.005, -72.9895)
    d = point_polyline_distance_m(*near_second_leg, geometry)
    d_leg2 = point_segment_distance_m(*near_second_leg, geometry[1], geometry[2])
    assert d == pytest.approx(d_leg2, rel=1e-12)


# ------------------------------------------------------------------ grid


def test_grid_cell_indexing_uses_floor():
    grid = GridSpec(cell_size_deg=0.01, origin=(0.0, 0.0))
    assert grid.cell_of(0.015, 0.024) == (1, 2)
    assert grid.cell_of(-0.001, 0.0) == (-1, 0)
    assert grid.cell_of(0.0, 0.0) == (0, 0)


def test_grid_ring_is_closed_with_five_lon_lat_vertices():
    grid = GridSpec(cell_size_deg=0.5, origin=(10.0, 20.0))
    ring = grid.cell_ring((2, 3))
    assert len(ring) == 5
    assert ring[0] == ring[-1]
    lons = [v[0] for v in ring[:4]]
    lats = [v[1] for v in ring[:4]]
    assert min(lons) == 20.0 + 3 * 0.5 and max(lons) == 20.0 + 4 * 0.5
    assert min(lats) == 10.0 + 2 * 0.5 and max(lats) == 10.0 + 3 * 0.5
    # shoelace: counter-clockwise ring has positive signed area
    area = sum(
        ring[i][0] * ring[i + 1][1] - ring[i + 1][0] * ring[i][1] for i in range(4)
    )
    assert area > 0


def test_grid_rejects_nonpositive_cell():
    with pytest.raises(GeoError):
        GridSpec(cell_size_deg=0.0, origin=(0.0, 0.0))


# ------------------------------------------------------------ assignment


def test_explicit_membership_beats_proximity():
    catalog = catalog_with_points({"p1": (45.0, -73.0), "p2": (45.0, -72.99)})
    far_segment = SegmentDef(
        segment_id="far",
        geometry=((44.0, -73.0), (44.0, -72.99)),
        frame_ids=frozenset({"frame_p1"}),
    )
    near_segment = SegmentDef(
        segment_id="near", geometry=((45.0, -73.0), (45.0, -72.99))
    )
    result = assign_frames(catalog, [far_segment, near_segment])
    assert result.assignment["frame_p1"] == "far"  # membership wins
    assert result.assignment["frame_p2"] == "near"
    assert result.unassigned == []


def test_frames_beyond_radius_are_reported_not_imputed():
    catalog = catalog_with_points({"p1": (45.0, -73.0), "p2": (45.1, -73.0)})  # ~11 km apart
    segment = SegmentDef(segment_id="s1", geometry=((45.0, -73.0), (45.0, -72.999)))
    result = assign_frames(catalog, [segment], radius_m=30.0)
    assert result.assignment == {"frame_p1": "s1"}
    assert result.unassigned == ["frame_p2"]


def test_grid_assignment_buckets_by_cell():
    catalog = catalog_with_points(
        {"p1": (0.015, 0.024), "p2": (0.015, 0.026), "p3": (0.031, 0.005)}
    )
    grid = GridSpec(cell_size_deg=0.01, origin=(0.0, 0.0))
    result = assign_frames(catalog, grid)
    assert result.assignment["frame_p1"] == (1, 2)
    assert result.assignment["frame_p2"] == (1, 2)
    assert result.assignment["frame_p3"] == (3, 0)
    assert result.unassigned == []


def test_assignment_restricted_to_requested_frames():
    catalog = catalog_with_points({"p1": (0.005, 0.005), "p2": (0.015, 0.015)})
    grid = GridSpec(cell_size_deg=0.01, origin=(0.0, 0.0))
    result = assign_frames(catalog, grid, frame_ids=["frame_p1"])
    assert sorted(result.assignment) == ["frame_p1"]
    with pytest.raises(GeoError):
        assign_frames(catalog, grid, frame_ids=["ghost_frame"])


# ------------------------------------------------- aggregation + export


def three_bucket_setup():
    """Nine frames in three grid cells with known predictions."""
    coords = {}
    preds = {}
    cell_values = {0: (1.0, 2.0, 3.0), 1: (2.0, 2.5, 3.0), 2: (4.0, 4.0, 4.0)}
    for cell, values in cell_values.items():
        for i, value in enumerate(values):
            pid = f"p{cell}_{i}"
            coords[pid] = (0.005 + cell * 0.01, 0.005)
            vec = np.full(28, 2.0)
            vec[output_index("collective", "inclusivity")] = value
            preds[f"frame_{pid}"] = vec
    catalog = catalog_with_points(coords)
    grid = GridSpec(cell_size_deg=0.01, origin=(0.0, 0.0))
    return catalog, grid, preds, cell_values


def test_aggregate_layer_means_per_bucket_and_accounts_for_every_frame():
    catalog, grid, preds, cell_values = three_bucket_setup()
    assignment = assign_frames(catalog, grid)
    layer = aggregate_layer(preds, assignment, "inclusivity", "collective")
    assert len(layer.cells) == 3
    total_images = sum(c.n_images for c in layer.cells)
    assert total_images + len(assignment.unassigned) == len(preds)
    by_bucket = {c.bucket: c for c in layer.cells}
    for cell, values in cell_values.items():
        got = by_bucket[(cell, 0)]
        assert got.score == pytest.approx(sum(values) / 3.0, abs=1e-12)
        assert got.n_images == 3
    assert grade(by_bucket[(0, 0)].score) == "C"  # mean 2.0
    assert grade(by_bucket[(2, 0)].score) == "A"  # mean 4.0


def test_group_weights_blend_channels():
    catalog, grid, preds, _ = three_bucket_setup()
    # make two group channels differ
    for vec in preds.values():
        vec[output_index("young_male", "inclusivity")] = 1.0
        vec[output_index("young_female", "inclusivity")] = 3.0
    assignment = assign_frames(catalog, grid)
    layer = aggregate_layer(
        preds,
        assignment,
        "inclusivity",
        "young_male",
        group_weights={"young_male": 0.5, "young_female": 0.5},
    )
    for cell in layer.cells:
        assert cell.score == pytest.approx(2.0, abs=1e-12)
    with pytest.raises(GeoError):
        aggregate_layer(
            preds, assignment, "inclusivity", "young_male",
            group_weights={"young_male": 0.7, "young_female": 0.6},
        )
    with pytest.raises(GeoError):
        aggregate_layer(
            preds, assignment, "inclusivity", "young_male",
            group_weights={"young_male": 1.5, "young_female": -0.5},
        )


def test_geojson_export_reparses_with_closed_rings(tmp_path):
    catalog, grid, preds, _ = three_bucket_setup()
    assignment = assign_frames(catalog, grid)
    layer = aggregate_layer(preds, assignment, "inclusivity", "collective")
    path = tmp_path / heatmap_filename("collective", "inclusivity")
    export_geojson(layer, grid, path)
    doc = json.loads(path.read_text())
    assert doc["type"] == "FeatureCollection"
    assert len(doc["features"]) == 3
    for feature in doc["features"]:
        assert feature["type"] == "Feature"
        geom = feature["geometry"]
        assert geom["type"] == "Polygon"
        ring = geom["coordinates"][0]
        assert ring[0] == ring[-1]
        assert len(ring) == 5
        props = feature["properties"]
        assert props["criterion"] == "inclusivity"
        assert props["group"] == "collective"
        assert 1.0 <= props["score"] <= 4.0
        assert props["grade"] in ("D", "C", "B", "A")
        assert props["n_images"] >= 1


def test_geojson_segment_export_uses_linestrings(tmp_path):
    catalog = catalog_with_points({"p1": (45.0, -73.0), "p2": (45.0, -72.999)})
    segment = SegmentDef(segment_id="seg1", geometry=((45.0, -73.0), (45.0, -72.999)))
    assignment = assign_frames(catalog, [segment])
    preds = {
        "frame_p1": np.full(28, 3.0),
        "frame_p2": np.full(28, 4.0),
    }
    layer = aggregate_layer(preds, assignment, "aesthetics", GROUPS[0])
    path = tmp_path / heatmap_filename(GROUPS[0], "aesthetics")
    export_geojson(layer, [segment], path)
    doc = json.loads(path.read_text())
    feature = doc["features"][0]
    assert feature["geometry"]["type"] == "LineString"
    # geometry serializes as [lon, lat]
    assert feature["geometry"]["coordinates"][0] == [-73.0, 45.0]
    assert feature["properties"]["score"] == pytest.approx(3.5)
    assert feature["properties"]["segment_id"] == "seg1"


def test_export_rejects_unknown_or_empty_layers(tmp_path):
    catalog, grid, preds, _ = three_bucket_setup()
    assignment = assign_frames(catalog, grid)
    layer = aggregate_layer(preds, assignment, "inclusivity", "collective")
    segment = SegmentDef(segment_id="other", geometry=((1.0, 1.0), (1.0, 1.001)))
    with pytest.raises(GeoError):
        export_geojson(layer, [segment], tmp_path / "x.geojson")  # buckets unknown to layout


def test_heatmap_filename_and_group_vocabulary():
    assert heatmap_filename("collective", "inclusivity") == "heatmap_collective_inclusivity.geojson"
    assert set(valid_groups()) == set(GROUPS) | {"collective"}
    with pytest.raises(GeoError):
        heatmap_filename("stranger", "inclusivity")


def test_segment_map_loader(tmp_path):
    path = tmp_path / "segments.jsonl"
    rows = [
        {"segment_id": "a", "coordinates": [[-73.0, 45.0], [-72.99, 45.0]]},
        {
            "segment_id": "b",
            "coordinates": [[-73.0, 45.01], [-72.99, 45.01]],
            "frame_ids": ["f9"],
        },
    ]
    path.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
    segments = load_segment_map(path)
    assert [s.segment_id for s in segments] == ["a", "b"]
    # file stores [lon, lat]; geometry holds (lat, lon)
    assert segments[0].geometry[0] == (45.0, -73.0)
    assert segments[1].frame_ids == frozenset({"f9"})

    bad = tmp_path / "dup.jsonl"
    bad.write_text(json.dumps(rows[0]) + "\n" + json.dumps(rows[0]) + "\n")
    with pytest.raises(GeoError):
        load_segment_map(bad)

    short = tmp_path / "short.jsonl"
    short.write_text(json.dumps({"segment_id": "x", "coordinates": [[-73.0, 45.0]]}) + "\n")
    with pytest.raises(GeoError):
        load_segment_map(short)


def test_segment_def_validation():
    with pytest.raises(GeoError):
        SegmentDef(segment_id="x", geometry=((45.0, -73.0),))  # one vertex
    with pytest.raises(GeoError):
        SegmentDef(segment_id="x", geometry=())  # no geometry, no members
    # membership-only definitions are allowed
    SegmentDef(segment_id="x", geometry=(), frame_ids=frozenset({"f1"}))
