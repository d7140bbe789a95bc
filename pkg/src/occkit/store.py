"""On-disk frame store backing the CLI and the annotation service.

Layout under the store root (``OCC_DATA_DIR`` or an explicit path):

    scene.json                     canonical scene description
    store.json                     {"version", "seed", "frame_count"}
    frames/f000/
        meta.json                  {"id", "frame_index", "status"}
        points.npz                 lidar points, labels, instance ids
        cameras.json               per-view camera models
        sem_0.png .. sem_5.png     semantic images (8-bit label ids)
        depth_0.png .. depth_5.png depth images (16-bit millimeters)
        gt.occ1                    optional ground truth
        v_init.occ1 / v_pseudo.occ1 / v_aug.occ1 / v_final.occ1
        journal.jsonl              append-only edit journal
        batches.json               idempotency tokens already applied

Grids are stored sparse (OCC1); edits are journaled, never applied in
place.  Frame status only moves forward: raw -> augmented -> in_review
-> finalized, and finalized frames reject further edits.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .aap import Edit, EditJournal, apply_edits, validate_edits
from .geometry import CameraModel, PointCloud, Pose
from .grid import DenseLabelGrid, GridSpec, SparseOccupancy
from .occ1 import occ1_read, occ1_write
from .synth import Scene

STATUSES = ("raw", "augmented", "in_review", "finalized")

GRID_KINDS = ("gt", "v_init", "v_pseudo", "v_aug", "v_final")


def data_dir_from_env() -> Path:
    root = os.environ.get("OCC_DATA_DIR", "")
    if not root:
        raise ValueError("OCC_DATA_DIR is not set and no --data was given")
    return Path(root)


def _write_atomic(path: Path, payload: bytes) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(payload)
    os.replace(tmp, path)


def _camera_to_obj(cam: CameraModel) -> dict:
    return {
        "name": cam.name,
        "width": cam.width,
        "height": cam.height,
        "fx": cam.fx,
        "fy": cam.fy,
        "cx": cam.cx,
        "cy": cam.cy,
        "rotation": cam.cam_from_world.rotation.tolist(),
        "translation": cam.cam_from_world.translation.tolist(),
    }


def _camera_from_obj(obj: dict) -> CameraModel:
    return CameraModel(
        name=obj["name"],
        width=obj["width"],
        height=obj["height"],
        fx=obj["fx"],
        fy=obj["fy"],
        cx=obj["cx"],
        cy=obj["cy"],
        cam_from_world=Pose(
            np.asarray(obj["rotation"], dtype=np.float64),
            np.asarray(obj["translation"], dtype=np.float64),
        ),
    )


@dataclass
class FrameRecord:
    id: str
    frame_index: int
    status: str


class FrameStore:
    """Filesystem-backed store with per-frame write serialization.

    One in-process lock per frame covers journal appends, status
    changes, and finalize; readers go lock-free (files are replaced
    atomically).
    """

    def __init__(self, root: Path | str):
        self.root = Path(root)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    # -- creation ---------------------------------------------------

    @classmethod
    def create(cls, root: Path | str, scene: Scene) -> "FrameStore":
        store = cls(root)
        store.root.mkdir(parents=True, exist_ok=True)
        (store.root / "frames").mkdir(exist_ok=True)
        _write_atomic(store.root / "scene.json", scene.to_json().encode())
        meta = {
            "version": 1,
            "seed": scene.seed,
            "frame_count": scene.config.frame_count,
        }
        _write_atomic(
            store.root / "store.json",
            json.dumps(meta, sort_keys=True, indent=1).encode(),
        )
        for t in range(scene.config.frame_count):
            fdir = store.frame_dir(store.frame_id(t))
            fdir.mkdir(parents=True, exist_ok=True)
            store._write_meta(
                store.frame_id(t),
                {"id": store.frame_id(t), "frame_index": t, "status": "raw"},
            )
        return store

    @staticmethod
    def frame_id(frame_index: int) -> str:
        return f"f{frame_index:03d}"

    def frame_dir(self, frame_id: str) -> Path:
        return self.root / "frames" / frame_id

    def _lock(self, frame_id: str) -> threading.Lock:
        with self._locks_guard:
            if frame_id not in self._locks:
                self._locks[frame_id] = threading.Lock()
            return self._locks[frame_id]

    # -- metadata ---------------------------------------------------

    def _write_meta(self, frame_id: str, meta: dict) -> None:
        _write_atomic(
            self.frame_dir(frame_id) / "meta.json",
            json.dumps(meta, sort_keys=True).encode(),
        )

    def _read_meta(self, frame_id: str) -> dict:
        path = self.frame_dir(frame_id) / "meta.json"
        if not path.exists():
            raise KeyError(f"unknown frame {frame_id!r}")
        return json.loads(path.read_text())

    def frames(self) -> list[FrameRecord]:
        frames_dir = self.root / "frames"
        if not frames_dir.is_dir():
            return []
        out = []
        for d in sorted(frames_dir.iterdir()):
            if d.is_dir() and (d / "meta.json").exists():
                meta = json.loads((d / "meta.json").read_text())
                out.append(
                    FrameRecord(meta["id"], meta["frame_index"], meta["status"])
                )
        return out

    def frame(self, frame_id: str) -> FrameRecord:
        meta = self._read_meta(frame_id)
        return FrameRecord(meta["id"], meta["frame_index"], meta["status"])

    def set_status(self, frame_id: str, status: str) -> None:
        """Forward-only transition along raw -> augmented -> in_review
        -> finalized; same-state writes are no-ops."""
        if status not in STATUSES:
            raise ValueError(f"unknown status {status!r}")
        meta = self._read_meta(frame_id)
        if STATUSES.index(status) < STATUSES.index(meta["status"]):
            raise ValueError(
                f"cannot move {frame_id} back from {meta['status']} to {status}"
            )
        meta["status"] = status
        self._write_meta(frame_id, meta)

    # -- scene and sensor data --------------------------------------

    def load_scene(self) -> Scene:
        return Scene.from_json((self.root / "scene.json").read_text())

    def save_points(self, frame_id: str, cloud: PointCloud) -> None:
        path = self.frame_dir(frame_id) / "points.npz"
        with open(path, "wb") as fh:
            np.savez_compressed(
                fh,
                points=cloud.points,
                labels=cloud.labels,
                instance_ids=cloud.instance_ids,
            )

    def load_points(self, frame_id: str) -> PointCloud:
        with np.load(self.frame_dir(frame_id) / "points.npz") as data:
            return PointCloud(
                data["points"], data["labels"], data["instance_ids"]
            )

    def save_cameras(self, frame_id: str, cams: list[CameraModel]) -> None:
        obj = [_camera_to_obj(c) for c in cams]
        _write_atomic(
            self.frame_dir(frame_id) / "cameras.json",
            json.dumps(obj, sort_keys=True).encode(),
        )

    def load_cameras(self, frame_id: str) -> list[CameraModel]:
        path = self.frame_dir(frame_id) / "cameras.json"
        return [_camera_from_obj(o) for o in json.loads(path.read_text())]

    def save_images(
        self, frame_id: str, semantic: list[np.ndarray], depth: list[np.ndarray]
    ) -> None:
        fdir = self.frame_dir(frame_id)
        for k, (sem, dep) in enumerate(zip(semantic, depth)):
            Image.fromarray(sem.astype(np.uint8)).save(fdir / f"sem_{k}.png")
            mm = np.clip(np.rint(dep * 1000.0), 0, 65535).astype(np.uint16)
            Image.fromarray(mm).save(fdir / f"depth_{k}.png")

    def image_path(self, frame_id: str, kind: str, view: int) -> Path:
        if kind not in ("sem", "depth"):
            raise ValueError(f"unknown image kind {kind!r}")
        return self.frame_dir(frame_id) / f"{kind}_{view}.png"

    def load_images(self, frame_id: str) -> tuple[list[np.ndarray], list[np.ndarray]]:
        """Semantic label images (uint8) and depth in meters (float64)."""
        sems, deps = [], []
        k = 0
        while self.image_path(frame_id, "sem", k).exists():
            sems.append(np.asarray(Image.open(self.image_path(frame_id, "sem", k))))
            mm = np.asarray(Image.open(self.image_path(frame_id, "depth", k)))
            deps.append(mm.astype(np.float64) / 1000.0)
            k += 1
        return sems, deps

    # -- grids ------------------------------------------------------

    def grid_path(self, frame_id: str, kind: str) -> Path:
        if kind not in GRID_KINDS:
            raise ValueError(f"unknown grid kind {kind!r}")
        return self.frame_dir(frame_id) / f"{kind}.occ1"

    def save_grid(self, frame_id: str, kind: str, grid: SparseOccupancy) -> None:
        _write_atomic(self.grid_path(frame_id, kind), occ1_write(grid))

    def load_grid(self, frame_id: str, kind: str) -> SparseOccupancy:
        path = self.grid_path(frame_id, kind)
        if not path.exists():
            raise FileNotFoundError(f"{frame_id} has no {kind} grid")
        return occ1_read(path.read_bytes())

    def has_grid(self, frame_id: str, kind: str) -> bool:
        return self.grid_path(frame_id, kind).exists()

    def current_grid(self, frame_id: str) -> SparseOccupancy | None:
        """The grid the labeler works on: final if present, else
        augmented, else initial."""
        for kind in ("v_final", "v_aug", "v_init"):
            if self.has_grid(frame_id, kind):
                return self.load_grid(frame_id, kind)
        return None

    # -- journal ----------------------------------------------------

    def journal_path(self, frame_id: str) -> Path:
        return self.frame_dir(frame_id) / "journal.jsonl"

    def load_journal(self, frame_id: str) -> EditJournal:
        frame_index = self._read_meta(frame_id)["frame_index"]
        path = self.journal_path(frame_id)
        if not path.exists():
            return EditJournal(frame_index, [])
        return EditJournal.from_jsonl(frame_index, path.read_text())

    def _load_batches(self, frame_id: str) -> dict:
        path = self.frame_dir(frame_id) / "batches.json"
        if not path.exists():
            return {}
        return json.loads(path.read_text())

    def append_edits(
        self, frame_id: str, edits: list[Edit], token: str | None = None
    ) -> int:
        """Append a batch under the frame lock; a batch whose token was
        already applied is not re-appended.  Returns the journal length
        after the call."""
        self._read_meta(frame_id)
        with self._lock(frame_id):
            meta = self._read_meta(frame_id)
            if meta["status"] == "finalized":
                raise PermissionError(f"{frame_id} is finalized")
            journal = self.load_journal(frame_id)
            if token is not None:
                batches = self._load_batches(frame_id)
                if token in batches:
                    return len(journal.edits)
            validate_edits(self._edit_spec(frame_id), list(edits))
            batch = EditJournal(meta["frame_index"], list(edits))
            with open(self.journal_path(frame_id), "a") as fh:
                fh.write(batch.to_jsonl())
            if token is not None:
                batches = self._load_batches(frame_id)
                batches[token] = len(journal.edits) + len(edits)
                _write_atomic(
                    self.frame_dir(frame_id) / "batches.json",
                    json.dumps(batches, sort_keys=True).encode(),
                )
            if meta["status"] in ("raw", "augmented"):
                self.set_status(frame_id, "in_review")
            return len(journal.edits) + len(edits)

    def _edit_spec(self, frame_id: str) -> GridSpec:
        grid = self.current_grid(frame_id)
        if grid is None:
            return GridSpec.standard()
        return grid.spec

    def preview(self, frame_id: str) -> DenseLabelGrid:
        """Current grid with the full journal applied."""
        base = self.current_grid(frame_id)
        if base is None:
            raise FileNotFoundError(f"{frame_id} has no occupancy yet")
        dense = base.to_dense()
        return apply_edits(dense, self.load_journal(frame_id))

    def finalize(self, frame_id: str) -> SparseOccupancy:
        """Apply the journal to the augmented grid, persist v_final, and
        lock the frame."""
        self._read_meta(frame_id)
        with self._lock(frame_id):
            meta = self._read_meta(frame_id)
            if meta["status"] == "finalized":
                raise PermissionError(f"{frame_id} is already finalized")
            final = SparseOccupancy.from_dense(self.preview(frame_id))
            self.save_grid(frame_id, "v_final", final)
            self.set_status(frame_id, "finalized")
            return final
