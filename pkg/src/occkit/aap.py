"""Annotation pipeline: superimpose, voxelize, augment, apply edits.

The pipeline turns multi-frame sensor data into a densified labeled
grid: all frames' points are merged into one target frame (static
points via ego poses, dynamic points via per-instance box poses),
voxelized by majority vote, augmented with model pseudo labels on
empty voxels only, and finally corrected by journaled human edits.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .geometry import PointCloud, Pose
from .grid import DenseLabelGrid, EMPTY_ID, GridSpec, N_LABELS, NOISE_ID


@dataclass
class SuperimposedCloud:
    """Multi-frame points merged into one frame's ego coordinates."""

    target_frame: int
    cloud: PointCloud

    @property
    def dynamic(self) -> np.ndarray:
        """Per-point flag: True for points that rode an object track."""
        return self.cloud.instance_ids >= 0


@dataclass(frozen=True)
class FramePoints:
    """Minimal per-frame input to superimpose: an index and its sweep.

    Any object with these two attributes works (FrameSensorData does).
    """

    frame_index: int
    point_cloud: PointCloud


def superimpose(
    frames: list, target_frame: int, ego_poses, tracks
) -> SuperimposedCloud:
    """Merge every frame's points into the target frame's ego coordinates.

    Static points (instance id -1) compose source-ego -> world ->
    target-ego.  Dynamic points are carried through their instance's box
    frame: source box pose out, target box pose back in, so the points
    land on the object wherever it sits at the target frame.  Instances
    with no box at the target frame are dropped; an instance id without
    a track entry is an error.
    """
    by_id = {tr.instance_id: tr for tr in tracks}
    frame_indices = [f.frame_index for f in frames]
    if target_frame not in frame_indices:
        raise ValueError(f"target frame {target_frame} not among frames")
    ego_tgt_inv = ego_poses[target_frame].inverse()

    parts: list[PointCloud] = []
    for f in frames:
        pc = f.point_cloud
        ego_src = ego_poses[f.frame_index]
        static = pc.instance_ids < 0
        if static.any():
            to_target = ego_tgt_inv.compose(ego_src)
            parts.append(
                PointCloud(
                    to_target.apply(pc.points[static]),
                    pc.labels[static],
                    pc.instance_ids[static],
                )
            )
        for iid in np.unique(pc.instance_ids[~static]):
            track = by_id.get(int(iid))
            if track is None:
                raise ValueError(f"point instance id {iid} has no track")
            box_tgt = track.boxes[target_frame]
            if box_tgt is None:
                continue  # absent at target: drop
            box_src = track.boxes[f.frame_index]
            sel = pc.instance_ids == iid
            move = (
                ego_tgt_inv.compose(box_tgt.pose())
                .compose(box_src.pose().inverse())
                .compose(ego_src)
            )
            parts.append(
                PointCloud(
                    move.apply(pc.points[sel]),
                    pc.labels[sel],
                    pc.instance_ids[sel],
                )
            )
    return SuperimposedCloud(target_frame, PointCloud.concatenate(parts))


def voxelize(cloud: SuperimposedCloud, spec: GridSpec) -> DenseLabelGrid:
    """Majority-vote label per voxel; ties to the lowest id; out-of-grid
    points ignored."""
    pc = cloud.cloud
    d, h, w = spec.dims
    g = (pc.points - np.asarray(spec.origin)) / spec.voxel_size
    idx = np.floor(g).astype(np.int64)
    ok = (
        (idx[:, 0] >= 0)
        & (idx[:, 0] < w)
        & (idx[:, 1] >= 0)
        & (idx[:, 1] < h)
        & (idx[:, 2] >= 0)
        & (idx[:, 2] < d)
    )
    idx = idx[ok]
    labels = pc.labels[ok].astype(np.int64)
    grid = DenseLabelGrid.empty(spec)
    if idx.shape[0] == 0:
        return grid
    flat = (idx[:, 2] * h + idx[:, 1]) * w + idx[:, 0]
    keys, counts = np.unique(flat * N_LABELS + labels, return_counts=True)
    voxels = keys // N_LABELS
    labs = keys % N_LABELS
    # per voxel: highest count wins, lowest label id on ties
    order = np.lexsort((labs, -counts, voxels))
    voxels = voxels[order]
    labs = labs[order]
    _, first = np.unique(voxels, return_index=True)
    win_voxels = voxels[first]
    win_labels = labs[first].astype(np.uint8)
    flat_view = grid.labels.reshape(-1)
    flat_view[win_voxels] = win_labels
    return grid


def augment(v_init: DenseLabelGrid, v_pseudo: DenseLabelGrid) -> DenseLabelGrid:
    """Fill only v_init's empty voxels from v_pseudo; never overwrite.

    Noise counts as occupied (the merge conditions on occupancy alone).
    Pseudo labels may not contain noise.
    """
    if v_init.spec != v_pseudo.spec:
        raise ValueError("grid spec mismatch")
    if (v_pseudo.labels == NOISE_ID).any():
        raise ValueError("pseudo labels must not contain the noise class")
    out = np.where(v_init.labels != EMPTY_ID, v_init.labels, v_pseudo.labels)
    return DenseLabelGrid(v_init.spec, out)


@dataclass(frozen=True)
class Edit:
    z: int
    y: int
    x: int
    label: int
    author: str
    ts: int  # milliseconds


@dataclass
class EditJournal:
    """Ordered human corrections for one frame."""

    frame_index: int
    edits: list[Edit] = field(default_factory=list)

    def to_jsonl(self) -> str:
        lines = [
            json.dumps(
                {
                    "z": e.z,
                    "y": e.y,
                    "x": e.x,
                    "label": e.label,
                    "author": e.author,
                    "ts": e.ts,
                },
                sort_keys=True,
                separators=(",", ":"),
            )
            for e in self.edits
        ]
        return "".join(line + "\n" for line in lines)

    @classmethod
    def from_jsonl(cls, frame_index: int, text: str) -> "EditJournal":
        edits = []
        for line in text.splitlines():
            if not line.strip():
                continue
            o = json.loads(line)
            edits.append(
                Edit(o["z"], o["y"], o["x"], o["label"], o["author"], o["ts"])
            )
        return cls(frame_index, edits)


def validate_edits(spec: GridSpec, edits: list[Edit]) -> None:
    """Raise if any edit falls outside ``spec`` or names a bad label."""
    d, h, w = spec.dims
    for e in edits:
        if not (0 <= e.z < d and 0 <= e.y < h and 0 <= e.x < w):
            raise IndexError(f"edit out of bounds: ({e.z},{e.y},{e.x})")
        if not (0 <= e.label < N_LABELS):
            raise ValueError(f"edit label out of range: {e.label}")


def apply_edits(v_aug: DenseLabelGrid, journal: EditJournal) -> DenseLabelGrid:
    """Replay edits in order (last writer wins); reject the whole journal
    if any edit is out of bounds or has an invalid label."""
    validate_edits(v_aug.spec, journal.edits)
    out = v_aug.copy()
    for e in journal.edits:
        out.labels[e.z, e.y, e.x] = e.label
    return out


def densification_stats(v_init: DenseLabelGrid, v_aug: DenseLabelGrid) -> dict:
    """Occupied-voxel counts before/after augmentation and their ratio."""
    if v_init.spec != v_aug.spec:
        raise ValueError("grid spec mismatch")
    count_init = v_init.occupied_count()
    count_aug = v_aug.occupied_count()
    if count_init == 0:
        ratio = 1.0 if count_aug == 0 else float("inf")
    else:
        ratio = count_aug / count_init
    return {"count_init": count_init, "count_aug": count_aug, "ratio": ratio}
