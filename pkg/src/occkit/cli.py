"""Command-line entry points.

Exit codes: 0 success, 2 usage error (click), 1 pipeline error (any
failure raised by the library surfaces as a ClickException).
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click

import occkit
from .aap import FramePoints, augment, densification_stats, superimpose, voxelize
from .conet import load_fine_fusion, refine
from .evaluation import evaluate_labels
from .grid import DenseLabelGrid, GridSpec, SparseOccupancy
from .network import (
    EncoderConfig,
    MODALITIES,
    baseline_forward,
    flop_count,
    load_head,
    memory_estimate,
)
from .occ1 import occ1_read_file, occ1_write_file
from .sampling import resample_argmax_labels
from .store import FrameStore, data_dir_from_env
from .synth import (
    Scene,
    SceneConfig,
    build_frame_sensor_data,
    generate_scene,
    ground_truth_occupancy,
)


def pipeline_errors(fn):
    """Map library failures to exit code 1 with a clean message."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ValueError, KeyError, IndexError, OSError) as exc:
            raise click.ClickException(str(exc))

    return wrapper


def _store(data: str | None) -> FrameStore:
    root = Path(data) if data else data_dir_from_env()
    if not (root / "store.json").exists():
        raise ValueError(f"{root} is not a frame store (no store.json)")
    return FrameStore(root)


def _targets(store: FrameStore, target: int | None) -> list:
    frames = store.frames()
    if target is None:
        return frames
    for rec in frames:
        if rec.frame_index == target:
            return [rec]
    raise ValueError(f"no frame with index {target}")


def _load_config(path: str | None) -> SceneConfig:
    if path is None:
        return SceneConfig()
    return SceneConfig.from_json_obj(json.loads(Path(path).read_text()))


data_option = click.option(
    "--data", type=click.Path(), default=None,
    help="Frame store root (default: $OCC_DATA_DIR).",
)
target_option = click.option(
    "--target", type=int, default=None,
    help="Single frame index (default: all frames).",
)
modality_option = click.option(
    "--modality", type=click.Choice(MODALITIES), default="multimodal",
    show_default=True,
)
stride_option = click.option(
    "--stride", type=click.Choice(["2", "4"]), default="4", show_default=True,
)


@click.group()
@click.version_option(version=occkit.__version__, prog_name="occkit")
def main() -> None:
    """Synthetic occupancy pipelines: generation, densification,
    prediction, refinement, evaluation, and the annotation service."""


@main.command()
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="Scene configuration JSON.")
@click.option("--out", "out_dir", type=click.Path(), required=True,
              help="Frame store directory to create.")
@click.option("--gt/--no-gt", default=False, show_default=True,
              help="Also rasterize per-frame ground-truth occupancy.")
@pipeline_errors
def gen(seed: int, config_path: str | None, out_dir: str, gt: bool) -> None:
    """Generate a synthetic scene and its per-frame sensor data."""
    config = _load_config(config_path)
    scene = generate_scene(seed, config)
    store = FrameStore.create(Path(out_dir), scene)
    spec = GridSpec.standard()
    for t in range(config.frame_count):
        fid = store.frame_id(t)
        frame = build_frame_sensor_data(scene, t)
        store.save_points(fid, frame.point_cloud)
        store.save_cameras(fid, frame.cameras)
        store.save_images(fid, frame.semantic_images, frame.depth_images)
        if gt:
            dense = ground_truth_occupancy(scene, t, spec)
            store.save_grid(fid, "gt", SparseOccupancy.from_dense(dense))
        click.echo(f"frame {fid}: {frame.point_cloud.points.shape[0]} points")
    click.echo(f"wrote scene {seed} with {config.frame_count} frames to {out_dir}")


@main.command(name="superimpose")
@data_option
@target_option
@pipeline_errors
def superimpose_cmd(data: str | None, target: int | None) -> None:
    """Aggregate every frame's points into each target frame and
    voxelize the result as the initial annotation."""
    store = _store(data)
    scene = store.load_scene()
    spec = GridSpec.standard()
    frames = [
        FramePoints(rec.frame_index, store.load_points(rec.id))
        for rec in store.frames()
    ]
    for rec in _targets(store, target):
        merged = superimpose(frames, rec.frame_index, scene.ego_poses, scene.tracks)
        v_init = voxelize(merged, spec)
        store.save_grid(rec.id, "v_init", SparseOccupancy.from_dense(v_init))
        click.echo(f"{rec.id}: v_init occupied {v_init.occupied_count()}")


def _predict_dense(store: FrameStore, rec, modality: str, stride: int) -> DenseLabelGrid:
    scene = store.load_scene()
    frame = build_frame_sensor_data(scene, rec.frame_index)
    cfg = EncoderConfig(stride=stride)
    head = load_head(modality)
    probs = baseline_forward(frame, modality, cfg, head)
    return resample_argmax_labels(probs, GridSpec.standard().dims)


@main.command()
@data_option
@target_option
@modality_option
@stride_option
@pipeline_errors
def predict(data: str | None, target: int | None, modality: str, stride: str) -> None:
    """Run the coarse forward pass and store full-resolution pseudo
    labels."""
    store = _store(data)
    for rec in _targets(store, target):
        dense = _predict_dense(store, rec, modality, int(stride))
        store.save_grid(rec.id, "v_pseudo", SparseOccupancy.from_dense(dense))
        click.echo(f"{rec.id}: v_pseudo occupied {dense.occupied_count()}")


@main.command(name="augment")
@data_option
@target_option
@modality_option
@stride_option
@pipeline_errors
def augment_cmd(data: str | None, target: int | None, modality: str, stride: str) -> None:
    """Fill empty initial-annotation voxels with pseudo labels.

    Computes and stores the pseudo labels first when a frame has none.
    """
    store = _store(data)
    for rec in _targets(store, target):
        v_init = store.load_grid(rec.id, "v_init").to_dense()
        if not store.has_grid(rec.id, "v_pseudo"):
            dense = _predict_dense(store, rec, modality, int(stride))
            store.save_grid(rec.id, "v_pseudo", SparseOccupancy.from_dense(dense))
        v_pseudo = store.load_grid(rec.id, "v_pseudo").to_dense()
        v_aug = augment(v_init, v_pseudo)
        store.save_grid(rec.id, "v_aug", SparseOccupancy.from_dense(v_aug))
        store.set_status(rec.id, "augmented")
        stats = densification_stats(v_init, v_aug)
        click.echo(f"{rec.id}: {json.dumps(stats, sort_keys=True)}")


@main.command(name="refine")
@data_option
@target_option
@modality_option
@stride_option
@click.option("--eta", type=int, default=4, show_default=True)
@pipeline_errors
def refine_cmd(data: str | None, target: int | None, modality: str, stride: str,
               eta: int) -> None:
    """Coarse-to-fine refinement; writes refined.occ1 per frame."""
    store = _store(data)
    scene = store.load_scene()
    cfg = EncoderConfig(stride=int(stride))
    head = load_head(modality)
    fine_cfg = load_fine_fusion(modality)
    for rec in _targets(store, target):
        frame = build_frame_sensor_data(scene, rec.frame_index)
        labels, _ = refine(frame, modality, cfg, head, fine_cfg, eta=eta)
        path = store.frame_dir(rec.id) / "refined.occ1"
        occ1_write_file(SparseOccupancy.from_dense(labels), path)
        d, h, w = labels.spec.dims
        click.echo(
            f"{rec.id}: refined ({d},{h},{w}) occupied {labels.occupied_count()}"
        )


@main.command(name="eval")
@click.option("--pred", "pred_path", type=click.Path(exists=True), required=True)
@click.option("--gt", "gt_path", type=click.Path(exists=True), required=True)
@pipeline_errors
def eval_cmd(pred_path: str, gt_path: str) -> None:
    """Evaluate one OCC1 prediction against OCC1 ground truth."""
    pred = occ1_read_file(pred_path).to_dense()
    gt = occ1_read_file(gt_path).to_dense()
    result = evaluate_labels(pred, gt)
    click.echo(f"iou={result.iou:.4f} miou={result.miou:.4f}")
    click.echo(result.to_json())


@main.command()
@click.option("--stride", "strides", type=click.Choice(["2", "4"]), multiple=True,
              default=("2", "4"), show_default=True)
@click.option("--eta", type=int, default=4, show_default=True)
@click.option("--occupancy", type=float, default=0.015, show_default=True,
              help="Occupied fraction assumed for the refinement stage.")
@pipeline_errors
def bench(strides: tuple[str, ...], eta: int, occupancy: float) -> None:
    """Analytic compute/memory report per stride."""
    spec = GridSpec.standard()
    rows = []
    decoder_flops = {}
    for s in strides:
        cfg = EncoderConfig(stride=int(s))
        enc = flop_count(cfg, spec, "encode", eta=eta, occupied_fraction=occupancy)
        dec = flop_count(cfg, spec, "decode", eta=eta, occupied_fraction=occupancy)
        ref = flop_count(cfg, spec, "refine", eta=eta, occupied_fraction=occupancy)
        mem = memory_estimate(cfg, spec, "decode")
        decoder_flops[s] = dec
        rows.append((s, enc, dec, ref, mem))
    click.echo("stride  encode_gflops  decode_gflops  refine_gflops  decode_mem_gb")
    for s, enc, dec, ref, mem in rows:
        click.echo(
            f"{s:>6}  {enc / 1e9:13.3f}  {dec / 1e9:13.3f}  {ref / 1e9:13.3f}"
            f"  {mem / 2**30:13.3f}"
        )
    if set(decoder_flops) == {"2", "4"}:
        ratio = decoder_flops["2"] / decoder_flops["4"]
        click.echo(f"decoder FLOP ratio (stride 2 / stride 4): {ratio:.2f}")
        dense = flop_count(EncoderConfig(stride=2), spec, "encode") + decoder_flops["2"]
        cascade = (
            flop_count(EncoderConfig(stride=4), spec, "encode")
            + decoder_flops["4"]
            + flop_count(
                EncoderConfig(stride=4), spec, "refine",
                eta=eta, occupied_fraction=occupancy,
            )
        )
        click.echo(
            f"cascade at stride 4 vs dense stride 2: "
            f"{cascade / 1e9:.3f} vs {dense / 1e9:.3f} GFLOPs "
            f"({cascade / dense:.2f}x)"
        )


@main.command()
@data_option
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8420, show_default=True)
@pipeline_errors
def serve(data: str | None, host: str, port: int) -> None:
    """Run the annotation HTTP service over a frame store."""
    import uvicorn

    from .service import create_app

    app = create_app(_store(data))
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command()
@data_option
@target_option
@pipeline_errors
def stats(data: str | None, target: int | None) -> None:
    """Densification statistics for augmented frames."""
    store = _store(data)
    for rec in _targets(store, target):
        v_init = store.load_grid(rec.id, "v_init").to_dense()
        v_aug = store.load_grid(rec.id, "v_aug").to_dense()
        click.echo(
            f"{rec.id}: "
            f"{json.dumps(densification_stats(v_init, v_aug), sort_keys=True)}"
        )


if __name__ == "__main__":
    sys.exit(main())
