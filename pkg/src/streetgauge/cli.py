"""Command-line pipeline orchestrator.

Commands read and write only the documented file formats, honor --seed
wherever randomness exists, and replace outputs atomically so every
command can be re-run.  Commands that populate a run directory also
record their inputs and seeds in run_manifest.json for provenance.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import click
import numpy as np

from streetgauge import catalog as cat
from streetgauge import evaluation, geo, ratings, topics
from streetgauge import segmentation as seg
from streetgauge.imagery import load_image
from streetgauge.model import (
    ModelConfig,
    TrainConfig,
    load_checkpoint,
    predict_batch,
    save_checkpoint,
    train as train_model,
)
from streetgauge.scores import CRITERIA, N_OUTPUTS, ScoreVector28, output_labels


def _fail(exc: Exception) -> "click.ClickException":
    message = " ".join(str(exc).split()) or type(exc).__name__
    return click.ClickException(f"{type(exc).__name__}: {message}")


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    try:
        if p.suffix == ".toml":
            try:
                import tomllib
            except ModuleNotFoundError:  # Python < 3.11
                import tomli as tomllib

            return tomllib.loads(p.read_text(encoding="utf-8"))
        return json.loads(p.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise _fail(exc) from exc


def _pick(explicit, cfg: dict, key: str, default):
    """Explicit flag beats config file beats built-in default."""
    if explicit is not None:
        return explicit
    if key in cfg:
        return cfg[key]
    return default


def _atomic_write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _record_provenance(out_dir: Path, command: str, inputs: dict, outputs: list[str]) -> None:
    manifest_path = out_dir / "run_manifest.json"
    manifest = {}
    if manifest_path.exists():
        try:
            manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        except ValueError:
            manifest = {}
    manifest[command] = {"inputs": inputs, "outputs": outputs}
    _atomic_write_text(manifest_path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _load_catalog(manifest: str, attributes: str | None) -> cat.Catalog:
    try:
        return cat.load_manifest(manifest, attributes)
    except (OSError, ValueError) as exc:
        raise _fail(exc) from exc


def _frame_targets(
    catalog: cat.Catalog,
    targets: dict[str, ScoreVector28],
    split: cat.SplitAssignment | None,
    subset: str | None,
    sequences: list[seg.FeatureSequence],
) -> tuple[list[seg.FeatureSequence], np.ndarray, np.ndarray]:
    """Select the sequences of one split subset and build target matrices."""
    chosen: list[seg.FeatureSequence] = []
    rows: list[np.ndarray] = []
    masks: list[np.ndarray] = []
    for sequence in sequences:
        frame = catalog.frames.get(sequence.frame_id)
        if frame is None:
            raise click.ClickException(
                f"ValueError: features reference frame {sequence.frame_id!r} "
                "absent from the catalog"
            )
        point_id = frame.point_id
        if subset is not None and split is not None:
            if split.assignment.get(point_id) != subset:
                continue
        vector = targets.get(point_id)
        if vector is None:
            continue
        chosen.append(sequence)
        rows.append(vector.flatten())
        masks.append(vector.mask())
    if not chosen:
        raise click.ClickException(
            "ValueError: no frames left after intersecting features, targets and split"
        )
    return chosen, np.asarray(rows), np.asarray(masks)


@click.group()
def main() -> None:
    """Streetscape perception pipeline: data prep, training, reporting."""


# ---------------------------------------------------------------- ingest


@main.command()
@click.option("--manifest", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--attributes", type=click.Path(exists=True, dir_okay=False))
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
def ingest(manifest: str, attributes: str | None, out_dir: str) -> None:
    """Validate a frame manifest and write the normalized catalog."""
    catalog = _load_catalog(manifest, attributes)
    report = cat.validate_catalog(catalog)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cat.write_manifest(catalog, out / "catalog.jsonl")
    _atomic_write_text(
        out / "validation.json",
        json.dumps(
            {"errors": report.errors, "warnings": report.warnings}, indent=2, sort_keys=True
        )
        + "\n",
    )
    for line in report.warnings:
        click.echo(f"warning: {line}")
    for line in report.errors:
        click.echo(f"error: {line}", err=True)
    _record_provenance(
        out,
        "ingest",
        {"manifest": manifest, "attributes": attributes},
        ["catalog.jsonl", "validation.json"],
    )
    click.echo(
        f"catalog: {len(catalog.streets)} streets, {len(catalog.points)} points, "
        f"{len(catalog.frames)} frames"
    )
    if report.errors:
        raise click.ClickException("ValidationError: catalog has errors (see validation.json)")


# ---------------------------------------------------------------- features


@main.command()
@click.option("--catalog", "catalog_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--base-dir", type=click.Path(exists=True, file_okay=False),
              help="Root for relative image/confmap paths (default: manifest directory).")
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--sample-size", type=int, default=None, help="Pixels sampled per frame.")
@click.option("--seed", type=int, default=None)
@click.option("--mock-segment", "use_mock", is_flag=True,
              help="Synthesize confidence maps for frames that lack one.")
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
def features(
    catalog_path: str,
    base_dir: str | None,
    out: str,
    sample_size: int | None,
    seed: int | None,
    use_mock: bool,
    jobs: int,
    config_path: str | None,
) -> None:
    """Extract per-pixel feature sequences for every cataloged frame."""
    cfg = _load_config_file(config_path)
    sample_size = int(_pick(sample_size, cfg, "sample_size", 1024))
    seed = int(_pick(seed, cfg, "seed", 0))
    catalog = _load_catalog(catalog_path, None)
    root = Path(base_dir) if base_dir else Path(catalog_path).parent

    def build(frame: cat.Frame) -> seg.FeatureSequence:
        image = load_image(root / frame.image_path)
        if frame.confmap_path is not None:
            confmap = seg.load_confidence_map(root / frame.confmap_path)
        elif use_mock:
            confmap = seg.mock_segment(image, seed)
        else:
            raise ValueError(
                f"frame {frame.frame_id!r} has no confidence map; "
                "supply one or pass --mock-segment"
            )
        return seg.extract_features(
            image, confmap, sample_size, seg.frame_seed(seed, frame.frame_id), frame.frame_id
        )

    frames = [catalog.frames[fid] for fid in sorted(catalog.frames)]
    try:
        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                sequences = list(pool.map(build, frames))
        else:
            sequences = [build(f) for f in frames]
        seg.write_feature_file(sequences, out)
    except (OSError, ValueError) as exc:
        raise _fail(exc) from exc
    click.echo(f"wrote {len(sequences)} feature sequences ({sample_size} rows each) to {out}")


# ---------------------------------------------------------------- aggregate-ratings


@main.command("aggregate-ratings")
@click.option("--ratings", "ratings_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--roster", "roster_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def aggregate_ratings(ratings_path: str, roster_path: str, out: str) -> None:
    """Average raw ratings into per-point 28-score targets (with imputation)."""
    try:
        records = ratings.load_ratings(ratings_path)
        roster = ratings.load_roster(roster_path)
        aggregated = ratings.aggregate_all_points(records, roster)
    except (OSError, ValueError) as exc:
        raise _fail(exc) from exc
    targets: dict[str, ScoreVector28] = {}
    n_imputed = 0
    for point_id, vector in aggregated.items():
        filled, imputed = ratings.impute_missing(vector)
        targets[point_id] = filled
        if imputed:
            n_imputed += len(imputed)
            click.echo(f"point {point_id}: imputed {', '.join(imputed)}")
    ratings.write_targets(targets, out)
    click.echo(f"wrote {len(targets)} point targets to {out} ({n_imputed} cells imputed)")


# ---------------------------------------------------------------- split


@main.command()
@click.option("--catalog", "catalog_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--ratios", default="0.70,0.15,0.15", show_default=True,
              help="train,val,test fractions summing to 1.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def split(catalog_path: str, ratios: str, seed: int, out: str) -> None:
    """Assign data points to train/val/test, stratified by street."""
    try:
        parts = tuple(float(x) for x in ratios.split(","))
        if len(parts) != 3:
            raise ValueError(f"need 3 comma-separated ratios, got {ratios!r}")
        catalog = _load_catalog(catalog_path, None)
        assignment = cat.stratified_split(catalog, parts, seed)
        cat.write_split(assignment, out)
    except (OSError, ValueError) as exc:
        raise _fail(exc) from exc
    counts = {s: len(assignment.points_in(s)) for s in cat.SPLITS}
    click.echo(
        f"split {counts['train']}/{counts['val']}/{counts['test']} "
        f"(train/val/test) written to {out}"
    )


# ---------------------------------------------------------------- train


@main.command()
@click.option("--catalog", "catalog_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--features", "features_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--targets", "targets_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--split", "split_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@click.option("--d-model", type=int, default=None)
@click.option("--n-heads", type=int, default=None)
@click.option("--learning-rate", type=float, default=None)
@click.option("--batch-size", type=int, default=None)
@click.option("--max-epochs", type=int, default=None)
@click.option("--patience", type=int, default=None)
@click.option("--seed", type=int, default=None, help="Seed for init and batching.")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
def train(
    catalog_path: str,
    features_path: str,
    targets_path: str,
    split_path: str,
    out_dir: str,
    d_model: int | None,
    n_heads: int | None,
    learning_rate: float | None,
    batch_size: int | None,
    max_epochs: int | None,
    patience: int | None,
    seed: int | None,
    config_path: str | None,
) -> None:
    """Fit the score regressor on the train split, early-stopping on val."""
    cfg = _load_config_file(config_path)
    seed = int(_pick(seed, cfg, "seed", 0))
    try:
        model_config = ModelConfig(
            d_model=int(_pick(d_model, cfg, "d_model", 96)),
            n_heads=int(_pick(n_heads, cfg, "n_heads", 6)),
            seed=seed,
        )
        train_config = TrainConfig(
            learning_rate=float(_pick(learning_rate, cfg, "learning_rate", 1e-3)),
            batch_size=int(_pick(batch_size, cfg, "batch_size", 16)),
            max_epochs=int(_pick(max_epochs, cfg, "max_epochs", 200)),
            patience=int(_pick(patience, cfg, "patience", 20)),
            seed=seed,
        )
        catalog = _load_catalog(catalog_path, None)
        sequences = seg.read_feature_file(features_path)
        targets = ratings.load_targets(targets_path)
        assignment = cat.load_split(split_path)

        train_seqs, train_rows, train_masks = _frame_targets(
            catalog, targets, assignment, "train", sequences
        )
        val_seqs, val_rows, val_masks = _frame_targets(
            catalog, targets, assignment, "val", sequences
        )
        train_examples = [
            (s.rows, train_rows[i], train_masks[i]) for i, s in enumerate(train_seqs)
        ]
        val_examples = [(s.rows, val_rows[i], val_masks[i]) for i, s in enumerate(val_seqs)]

        params, history = train_model(train_examples, val_examples, model_config, train_config)
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        save_checkpoint(out / "checkpoint.bin", params, extra={"seed": seed})
        history.write_csv(out / "history.csv")
    except (OSError, ValueError, RuntimeError) as exc:
        raise _fail(exc) from exc
    _record_provenance(
        out,
        "train",
        {
            "features": features_path,
            "targets": targets_path,
            "split": split_path,
            "seed": seed,
            "model": model_config.to_dict(),
        },
        ["checkpoint.bin", "history.csv"],
    )
    click.echo(
        f"trained {params.count()} parameters on {len(train_examples)} frames; "
        f"best val MSE {history.best_val_loss:.6f} at epoch {history.best_epoch} "
        f"({'early stop' if history.stopped_early else 'ran to max epochs'})"
    )


# ---------------------------------------------------------------- eval


def _load_eval_inputs(catalog_path, features_path, targets_path, split_path, subset):
    catalog = _load_catalog(catalog_path, None)
    sequences = seg.read_feature_file(features_path)
    targets = ratings.load_targets(targets_path)
    assignment = cat.load_split(split_path) if split_path else None
    if subset is not None and assignment is None:
        raise click.ClickException("ValueError: --subset requires --split")
    chosen, rows, masks = _frame_targets(catalog, targets, assignment, subset, sequences)
    return chosen, rows, masks


@main.command("eval")
@click.option("--checkpoint", "checkpoint_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--catalog", "catalog_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--features", "features_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--targets", "targets_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--split", "split_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--subset", type=click.Choice(cat.SPLITS), default=None,
              help="Evaluate only this split subset (requires --split).")
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
def eval_cmd(
    checkpoint_path: str,
    catalog_path: str,
    features_path: str,
    targets_path: str,
    split_path: str | None,
    subset: str | None,
    out_dir: str,
) -> None:
    """Score a checkpoint: R² overall, per output, and per-output mean."""
    try:
        params, _header = load_checkpoint(checkpoint_path)
        chosen, rows, _masks = _load_eval_inputs(
            catalog_path, features_path, targets_path, split_path, subset
        )
        preds, _ = predict_batch(params, [s.rows for s in chosen], clamp=False)
        report = evaluation.r_squared(preds, rows)
    except (OSError, ValueError) as exc:
        raise _fail(exc) from exc
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    payload = {
        "subset": subset or "all",
        "n_frames": len(chosen),
        **report.to_json_dict(),
    }
    _atomic_write_text(out / "eval_report.json", json.dumps(payload, indent=2, sort_keys=True) + "\n")
    report.write_csv(out / "eval_report.csv")
    _record_provenance(
        out,
        "eval",
        {
            "checkpoint": checkpoint_path,
            "features": features_path,
            "targets": targets_path,
            "split": split_path,
            "subset": subset,
        },
        ["eval_report.json", "eval_report.csv"],
    )
    click.echo(f"overall R² = {report.overall:.4f} (mean per output {report.mean_per_output:.4f})")


# ---------------------------------------------------------------- perm-importance


@main.command("perm-importance")
@click.option("--checkpoint", "checkpoint_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--catalog", "catalog_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--features", "features_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--targets", "targets_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--split", "split_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--subset", type=click.Choice(cat.SPLITS), default=None)
@click.option("--shuffles", type=int, default=100, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
def perm_importance(
    checkpoint_path: str,
    catalog_path: str,
    features_path: str,
    targets_path: str,
    split_path: str | None,
    subset: str | None,
    shuffles: int,
    seed: int,
    out_dir: str,
) -> None:
    """Permutation importance of each input feature on an evaluation set."""
    try:
        params, _header = load_checkpoint(checkpoint_path)
        chosen, rows, _masks = _load_eval_inputs(
            catalog_path, features_path, targets_path, split_path, subset
        )
        report = evaluation.permutation_importance(
            params, [s.rows for s in chosen], rows, n_shuffles=shuffles, seed=seed
        )
    except (OSError, ValueError) as exc:
        raise _fail(exc) from exc
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _atomic_write_text(
        out / "perm_importance.json",
        json.dumps(report.to_json_dict(), indent=2, sort_keys=True) + "\n",
    )
    report.write_csv(out / "perm_importance.csv")
    _record_provenance(
        out,
        "perm-importance",
        {
            "checkpoint": checkpoint_path,
            "features": features_path,
            "targets": targets_path,
            "split": split_path,
            "subset": subset,
            "shuffles": shuffles,
            "seed": seed,
        },
        ["perm_importance.json", "perm_importance.csv"],
    )
    top = report.ranked()[:3]
    click.echo(
        "top features by mean ΔR²: "
        + ", ".join(f"{name} ({delta:.4f})" for name, delta in top)
    )


# ---------------------------------------------------------------- correlate


@main.command()
@click.option("--targets", "targets_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--group", default="collective", show_default=True,
              help="Demographic group whose criterion scores to correlate, or 'collective'.")
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
def correlate(targets_path: str, group: str, out_dir: str) -> None:
    """Pearson correlation matrix among the four criteria over points."""
    if group not in geo.valid_groups():
        raise click.ClickException(
            f"ValueError: unknown group {group!r}; pick one of {', '.join(geo.valid_groups())}"
        )
    try:
        targets = ratings.load_targets(targets_path)
        point_scores = {}
        for point_id, vector in targets.items():
            flat = vector.flatten()
            values = [flat[_criterion_slot(group, c)] for c in CRITERIA]
            if not any(np.isnan(values)):
                point_scores[point_id] = np.asarray(values)
        matrix = evaluation.correlation_matrix(point_scores)
    except (OSError, ValueError) as exc:
        raise _fail(exc) from exc
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _atomic_write_text(
        out / f"correlation_{group}.json",
        json.dumps(matrix.to_json_dict(), indent=2, sort_keys=True) + "\n",
    )
    matrix.write_csv(out / f"correlation_{group}.csv")
    _record_provenance(
        out,
        "correlate",
        {"targets": targets_path, "group": group},
        [f"correlation_{group}.json", f"correlation_{group}.csv"],
    )
    for label, row in zip(matrix.labels, matrix.matrix):
        cells = " ".join("   n/a" if v is None else f"{v:+.3f}" for v in row)
        click.echo(f"{label:>14} {cells}")


def _criterion_slot(group: str, criterion: str) -> int:
    from streetgauge.scores import output_index

    return output_index(group, criterion)


# ---------------------------------------------------------------- infer


@main.command()
@click.option("--checkpoint", "checkpoint_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--features", "features_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def infer(checkpoint_path: str, features_path: str, out: str) -> None:
    """Predict 28 scores for every frame in a feature file."""
    try:
        params, _header = load_checkpoint(checkpoint_path)
        sequences = seg.read_feature_file(features_path)
        preds, clamped = predict_batch(params, [s.rows for s in sequences], clamp=True)
    except (OSError, ValueError) as exc:
        raise _fail(exc) from exc
    lines = []
    for i, sequence in enumerate(sequences):
        lines.append(
            json.dumps(
                {
                    "frame_id": sequence.frame_id,
                    "scores": [round(float(v), 10) for v in preds[i]],
                    "clamped": bool(clamped[i]),
                },
                sort_keys=True,
            )
        )
    _atomic_write_text(Path(out), "\n".join(lines) + ("\n" if lines else ""))
    click.echo(
        f"predicted {len(sequences)} frames ({int(clamped.sum())} clamped) to {out}"
    )


# ---------------------------------------------------------------- heatmap


@main.command()
@click.option("--predictions", "predictions_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--catalog", "catalog_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--segments", "segments_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--grid-size", type=float, default=None, help="Grid cell size in degrees.")
@click.option("--grid-origin", default="0,0", show_default=True, help="Grid origin lat,lon.")
@click.option("--radius-m", type=float, default=geo.DEFAULT_RADIUS_M, show_default=True)
@click.option("--criterion", required=True, type=click.Choice(CRITERIA))
@click.option("--group", required=True)
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
def heatmap(
    predictions_path: str,
    catalog_path: str,
    segments_path: str | None,
    grid_size: float | None,
    grid_origin: str,
    radius_m: float,
    criterion: str,
    group: str,
    out_dir: str,
) -> None:
    """Aggregate frame predictions into one (group, criterion) GeoJSON layer."""
    if group not in geo.valid_groups():
        raise click.ClickException(
            f"ValueError: unknown group {group!r}; pick one of {', '.join(geo.valid_groups())}"
        )
    if (segments_path is None) == (grid_size is None):
        raise click.ClickException(
            "ValueError: pass exactly one of --segments or --grid-size"
        )
    try:
        catalog = _load_catalog(catalog_path, None)
        preds: dict[str, np.ndarray] = {}
        with open(predictions_path) as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                obj = json.loads(line)
                scores = np.asarray(obj["scores"], dtype=np.float64)
                if scores.shape != (N_OUTPUTS,):
                    raise ValueError(f"line {lineno}: expected {N_OUTPUTS} scores")
                preds[str(obj["frame_id"])] = scores
        if segments_path is not None:
            layout: list[geo.SegmentDef] | geo.GridSpec = geo.load_segment_map(segments_path)
        else:
            lat_s, lon_s = grid_origin.split(",")
            layout = geo.GridSpec(cell_size_deg=grid_size, origin=(float(lat_s), float(lon_s)))
        assignment = geo.assign_frames(catalog, layout, radius_m=radius_m, frame_ids=sorted(preds))
        layer = geo.aggregate_layer(preds, assignment, criterion, group)
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        filename = geo.heatmap_filename(group, criterion)
        geo.export_geojson(layer, layout, out / filename)
    except (OSError, ValueError) as exc:
        raise _fail(exc) from exc
    _record_provenance(
        out,
        "heatmap",
        {
            "predictions": predictions_path,
            "catalog": catalog_path,
            "segments": segments_path,
            "grid_size": grid_size,
            "criterion": criterion,
            "group": group,
        },
        [filename],
    )
    click.echo(
        f"{filename}: {len(layer.cells)} buckets from "
        f"{len(preds) - len(assignment.unassigned)} frames "
        f"({len(assignment.unassigned)} unassigned)"
    )


# ---------------------------------------------------------------- topics


@main.command("topics")
@click.option("--transcripts", "transcripts_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--k", type=int, default=topics.DEFAULT_K, show_default=True)
@click.option("--alpha", type=float, default=None, help="Doc-topic prior (default 50/k).")
@click.option("--beta", type=float, default=topics.DEFAULT_BETA, show_default=True)
@click.option("--iters", type=int, default=topics.DEFAULT_ITERS, show_default=True)
@click.option("--burn-in", type=int, default=topics.DEFAULT_BURN_IN, show_default=True)
@click.option("--threshold", type=float, default=topics.DEFAULT_COOC_THRESHOLD, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--backend", type=click.Choice(["auto", "compiled", "python"]), default="auto",
              show_default=True)
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
def topics_cmd(
    transcripts_path: str,
    k: int,
    alpha: float | None,
    beta: float,
    iters: int,
    burn_in: int,
    threshold: float,
    seed: int,
    backend: str,
    out_dir: str,
) -> None:
    """Fit LDA topics on transcripts; export the model and co-occurrence graph."""
    try:
        corpus = topics.load_corpus(transcripts_path)
        model = topics.fit_lda(
            corpus,
            k=k,
            alpha=alpha,
            beta=beta,
            iters=iters,
            burn_in=burn_in,
            seed=seed,
            backend=backend,
        )
        graph = topics.cooccurrence_graph(model, threshold=threshold)
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        topics.write_topic_model(model, out / "topic_model.json")
        topics.write_cooc_graph(graph, out / "cooc_graph.json")
    except (OSError, ValueError, RuntimeError) as exc:
        raise _fail(exc) from exc
    _record_provenance(
        out,
        "topics",
        {
            "transcripts": transcripts_path,
            "k": k,
            "iters": iters,
            "burn_in": burn_in,
            "seed": seed,
            "backend": backend,
        },
        ["topic_model.json", "cooc_graph.json"],
    )
    for i, words in enumerate(model.top_words(8)):
        click.echo(f"topic {i}: {' '.join(words)}")
    click.echo(f"co-occurrence edges at theta >= {threshold}: {len(graph.edges)}")


# ---------------------------------------------------------------- stats


@main.command()
@click.option("--ratings", "ratings_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--roster", "roster_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
def stats(ratings_path: str, roster_path: str, out_dir: str) -> None:
    """Distribution summaries of the collected ratings."""
    try:
        records = ratings.load_ratings(ratings_path)
        roster = ratings.load_roster(roster_path)
    except (OSError, ValueError) as exc:
        raise _fail(exc) from exc
    payload: dict = {"per_stage": {}, "group_inclusivity": {}}
    for stage in ratings.STAGES:
        per_criterion = ratings.summary_stats(records, stage)
        payload["per_stage"][stage] = {
            criterion: {"mean": s.mean, "sd": s.sd, "n": s.n}
            for criterion, s in per_criterion.items()
        }
    payload["group_inclusivity"] = {
        group: summary.to_dict()
        for group, summary in ratings.group_rating_distribution(records, roster).items()
    }
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _atomic_write_text(
        out / "rating_stats.json", json.dumps(payload, indent=2, sort_keys=True) + "\n"
    )
    _record_provenance(
        out,
        "stats",
        {"ratings": ratings_path, "roster": roster_path},
        ["rating_stats.json"],
    )
    for stage in ratings.STAGES:
        for criterion in CRITERIA:
            entry = payload["per_stage"][stage][criterion]
            if entry["n"]:
                click.echo(
                    f"{stage:>10} {criterion:>14}: mean {entry['mean']:.2f} "
                    f"sd {entry['sd']:.2f} (n={entry['n']})"
                )


# ---------------------------------------------------------------- serve


@main.command()
@click.option("--catalog", "catalog_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--data-dir", required=True, type=click.Path(file_okay=False))
@click.option("--images", "images_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--ui", "ui_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(
    catalog_path: str,
    data_dir: str,
    images_dir: str | None,
    ui_dir: str | None,
    host: str,
    port: int,
) -> None:
    """Run the rating-collection HTTP service."""
    import uvicorn

    from streetgauge.service import create_app

    catalog = _load_catalog(catalog_path, None)
    app = create_app(catalog, data_dir, image_dir=images_dir, ui_dir=ui_dir)
    click.echo(f"serving on http://{host}:{port}")
    uvicorn.run(app, host=host, port=port, log_level="info")


def file_digest(path: str | Path) -> str:
    """blake2b content digest used by reproducibility checks."""
    h = hashlib.blake2b(digest_size=16)
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


if __name__ == "__main__":
    main()
