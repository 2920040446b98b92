"""Synthetic end-to-end fixture generator.

Builds a miniature but fully coherent study directory: street manifest,
raster images, confidence maps, participant roster, individual/collective
ratings, interview transcripts, and a street-segment map.  The data carries
a known signal — every point has a "truth" level t in [1,4] stored in the
sidewalk confidence channel as s=(t-1)/3, and all ratings average exactly
to t — so a trained model should recover the scores almost perfectly, and
permutation importance must single out the sidewalk feature.  The green
image channel is constant everywhere, making its importance exactly zero.

Everything is deterministic per seed.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from streetgauge.catalog import (
    ATTRIBUTE_DIMENSIONS,
    POSITIONS,
    Catalog,
    DataPoint,
    Frame,
    StreetSite,
    write_manifest,
)
from streetgauge.imagery import write_srim
from streetgauge.ratings import (
    Participant,
    RatingRecord,
    write_ratings,
    write_roster,
)
from streetgauge.scores import CRITERIA, GROUPS
from streetgauge.segmentation import (
    CLASS_NAMES,
    ConfidenceMap,
    frame_seed,
    write_confidence_map,
)

SIDEWALK_CLASS = CLASS_NAMES.index("sidewalk")
GREEN_LEVEL = 128  # constant green byte -> constant g feature column

_ATTRIBUTE_CHOICES = {
    "density": ("low", "medium", "high"),
    "socio_economic_status": ("lower", "mixed", "upper"),
    "greenery": ("sparse", "moderate", "lush"),
    "land_use": ("residential", "commercial", "mixed"),
    "historical_context": ("heritage", "modern", "transitional"),
    "urbanization": ("core", "inner", "peripheral"),
    "affordance": ("transit", "leisure", "retail"),
    "space_to_user": ("tight", "balanced", "generous"),
}

_TOPIC_WORDS = (
    (
        "sidewalk ramp curb bench crossing handrail pavement step access "
        "slope railing tactile"
    ).split(),
    (
        "tree flower garden shade lawn planter blossom hedge leaf canopy "
        "shrub meadow"
    ).split(),
)


def truth_levels(n_points: int) -> list[float]:
    """Evenly spread scores over [1,4], snapped to the 0.5 grid.

    Half-steps are exactly expressible as means of two integer ratings, so
    aggregated targets reproduce these levels without quantization error.
    """
    if n_points == 1:
        return [2.5]
    levels = []
    for i in range(n_points):
        raw = 1.0 + 3.0 * i / (n_points - 1)
        levels.append(min(4.0, max(1.0, round(raw * 2.0) / 2.0)))
    return levels


def _rating_pair(t: float) -> tuple[int, int]:
    """Two integers in 1..4 whose mean is exactly t (t on the 0.5 grid)."""
    lo = int(np.floor(t))
    hi = int(np.ceil(t))
    return lo, hi


def default_roster() -> list[Participant]:
    """Two raters per demographic group; the first is the facilitator."""
    roster = []
    for gi, group in enumerate(GROUPS):
        for j in (1, 2):
            roster.append(
                Participant(
                    participant_id=f"{group}_{j}",
                    groups=frozenset({group}),
                    facilitator=(gi == 0 and j == 1),
                )
            )
    return roster


def build_fixture(
    root: str | Path,
    n_streets: int = 6,
    points_per_street: int = 3,
    frames_per_point: int = 4,
    image_size: int = 24,
    seed: int = 7,
) -> dict[str, Path]:
    """Write the full fixture tree under root; returns the path map."""
    if not 1 <= points_per_street <= len(POSITIONS):
        raise ValueError(f"points_per_street must be 1..{len(POSITIONS)}")
    root = Path(root)
    images_dir = root / "images"
    confmaps_dir = root / "confmaps"
    images_dir.mkdir(parents=True, exist_ok=True)
    confmaps_dir.mkdir(parents=True, exist_ok=True)

    streets: dict[str, StreetSite] = {}
    points: dict[str, DataPoint] = {}
    frames: dict[str, Frame] = {}
    n_points = n_streets * points_per_street
    levels = truth_levels(n_points)
    point_truth: dict[str, float] = {}

    idx = 0
    for si in range(n_streets):
        street_id = f"st{si:02d}"
        streets[street_id] = StreetSite(
            street_id=street_id,
            name=f"Study Street {si}",
            attributes={
                dim: _ATTRIBUTE_CHOICES[dim][(si + k) % 3]
                for k, dim in enumerate(ATTRIBUTE_DIMENSIONS)
            },
        )
        for pi in range(points_per_street):
            point_id = f"pt_{street_id}_{POSITIONS[pi]}"
            lat = 45.50 + si * 0.002 + pi * 0.0005
            lon = -73.60 + si * 0.001 + pi * 0.0005
            points[point_id] = DataPoint(
                point_id=point_id,
                street_id=street_id,
                position=POSITIONS[pi],
                lat=lat,
                lon=lon,
            )
            t = levels[idx]
            point_truth[point_id] = t
            sidewalk = (t - 1.0) / 3.0
            idx += 1
            for ai in range(frames_per_point):
                frame_id = f"f_{point_id}_{ai:03d}"
                rng = np.random.default_rng(frame_seed(seed, frame_id))
                image = rng.integers(0, 256, size=(image_size, image_size, 3), dtype=np.uint8)
                image[:, :, 1] = GREEN_LEVEL
                write_srim(image, images_dir / f"{frame_id}.srim")

                conf = rng.random((image_size, image_size, len(CLASS_NAMES))).astype(np.float32)
                conf[:, :, SIDEWALK_CLASS] = np.float32(sidewalk)
                write_confidence_map(ConfidenceMap(conf), confmaps_dir / f"{frame_id}.srcm")

                frames[frame_id] = Frame(
                    frame_id=frame_id,
                    point_id=point_id,
                    angle_index=ai,
                    image_path=f"images/{frame_id}.srim",
                    confmap_path=f"confmaps/{frame_id}.srcm",
                )

    catalog = Catalog(streets=streets, points=points, frames=frames)
    manifest_path = root / "manifest.jsonl"
    write_manifest(catalog, manifest_path)
    attributes_path = root / "attributes.json"
    with open(attributes_path, "w") as fh:
        json.dump(
            {
                sid: {"name": street.name, **street.attributes}
                for sid, street in sorted(streets.items())
            },
            fh,
            indent=2,
            sort_keys=True,
        )
        fh.write("\n")

    roster = default_roster()
    roster_path = root / "roster.json"
    write_roster(roster, roster_path)

    records: list[RatingRecord] = []
    for point_id in sorted(points):
        lo, hi = _rating_pair(point_truth[point_id])
        for group in GROUPS:
            for j, value in ((1, lo), (2, hi)):
                for criterion in CRITERIA:
                    records.append(
                        RatingRecord(
                            participant_id=f"{group}_{j}",
                            point_id=point_id,
                            criterion=criterion,
                            value=value,
                            stage="individual",
                        )
                    )
        for session, value in (("session_a", lo), ("session_b", hi)):
            for criterion in CRITERIA:
                records.append(
                    RatingRecord(
                        participant_id=session,
                        point_id=point_id,
                        criterion=criterion,
                        value=value,
                        stage="collective",
                    )
                )
    ratings_path = root / "ratings.jsonl"
    write_ratings(records, ratings_path)

    transcripts_path = root / "transcripts.jsonl"
    rng = np.random.default_rng(seed)
    with open(transcripts_path, "w") as fh:
        for d in range(24):
            topic = d % 2
            words = rng.choice(_TOPIC_WORDS[topic], size=12, replace=True)
            fh.write(
                json.dumps({"doc_id": f"doc{d:02d}", "text": " ".join(words)}) + "\n"
            )

    segments_path = root / "segments.jsonl"
    with open(segments_path, "w") as fh:
        for street_id in sorted(streets):
            pts = sorted(catalog.points_of_street(street_id), key=lambda p: p.point_id)
            coords = [[p.lon, p.lat] for p in pts]
            if len(coords) == 1:
                coords.append([coords[0][0] + 1e-4, coords[0][1]])
            fh.write(
                json.dumps({"segment_id": street_id, "coordinates": coords}) + "\n"
            )

    truth_path = root / "truth.json"
    with open(truth_path, "w") as fh:
        json.dump(point_truth, fh, indent=2, sort_keys=True)
        fh.write("\n")

    return {
        "root": root,
        "manifest": manifest_path,
        "attributes": attributes_path,
        "images": images_dir,
        "confmaps": confmaps_dir,
        "roster": roster_path,
        "ratings": ratings_path,
        "transcripts": transcripts_path,
        "segments": segments_path,
        "truth": truth_path,
    }


def main(argv: list[str] | None = None) -> None:
    import argparse

    parser = argparse.ArgumentParser(description="generate a synthetic study fixture")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--streets", type=int, default=6)
    parser.add_argument("--points-per-street", type=int, default=3)
    parser.add_argument("--frames-per-point", type=int, default=4)
    parser.add_argument("--image-size", type=int, default=24)
    args = parser.parse_args(argv)
    paths = build_fixture(
        args.out,
        n_streets=args.streets,
        points_per_street=args.points_per_street,
        frames_per_point=args.frames_per_point,
        image_size=args.image_size,
        seed=args.seed,
    )
    print(f"fixture written under {paths['root']}")


if __name__ == "__main__":
    main()
