"""HTTP annotation service.

Thin JSON layer over FrameStore for the browser labeler: list frames,
fetch occupancy and camera views, journal edits, preview, finalize.
Writes serialize through the store's per-frame locks, so concurrent
edit batches to one frame form a total order and none are lost.
"""

from __future__ import annotations

import time
from pathlib import Path

from fastapi import FastAPI, HTTPException, Response
from pydantic import BaseModel, Field

from .aap import Edit
from .grid import GridSpec, N_LABELS, SparseOccupancy
from .store import FrameStore


class EditIn(BaseModel):
    z: int
    y: int
    x: int
    label: int = Field(ge=0, lt=N_LABELS)
    author: str = "labeler"
    ts: int | None = None


class EditBatch(BaseModel):
    edits: list[EditIn]
    token: str | None = None


def _spec_obj(spec: GridSpec) -> dict:
    return {
        "origin": list(spec.origin),
        "voxel_size": spec.voxel_size,
        "dims": list(spec.dims),
    }


def _sparse_obj(grid: SparseOccupancy) -> dict:
    records = [
        [int(z), int(y), int(x), int(label)]
        for (z, y, x), label in zip(grid.indices, grid.labels)
    ]
    return {"spec": _spec_obj(grid.spec), "records": records}


def create_app(store: FrameStore) -> FastAPI:
    app = FastAPI(title="occkit annotation service")

    def get_frame(frame_id: str):
        try:
            return store.frame(frame_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown frame {frame_id!r}")

    @app.get("/api/frames")
    def list_frames() -> list[dict]:
        out = []
        for rec in store.frames():
            grid = store.current_grid(rec.id)
            count = 0 if grid is None else int(grid.labels.shape[0])
            out.append(
                {"id": rec.id, "status": rec.status, "occupied_count": count}
            )
        return out

    @app.get("/api/frames/{frame_id}/occupancy")
    def occupancy(frame_id: str) -> dict:
        rec = get_frame(frame_id)
        grid = store.current_grid(rec.id)
        if grid is None:
            return {"spec": _spec_obj(GridSpec.standard()), "records": []}
        return _sparse_obj(grid)

    @app.get("/api/frames/{frame_id}/views")
    def views(frame_id: str) -> dict:
        rec = get_frame(frame_id)
        try:
            cams = store.load_cameras(rec.id)
        except FileNotFoundError:
            raise HTTPException(status_code=404, detail="frame has no camera data")
        out = []
        for k, cam in enumerate(cams):
            out.append(
                {
                    "name": cam.name,
                    "width": cam.width,
                    "height": cam.height,
                    "fx": cam.fx,
                    "fy": cam.fy,
                    "cx": cam.cx,
                    "cy": cam.cy,
                    "rotation": cam.cam_from_world.rotation.tolist(),
                    "translation": cam.cam_from_world.translation.tolist(),
                    "semantic_url": f"/api/frames/{frame_id}/images/sem/{k}.png",
                    "depth_url": f"/api/frames/{frame_id}/images/depth/{k}.png",
                }
            )
        return {"cameras": out}

    @app.get("/api/frames/{frame_id}/images/{kind}/{view}.png")
    def image(frame_id: str, kind: str, view: int) -> Response:
        rec = get_frame(frame_id)
        if kind not in ("sem", "depth"):
            raise HTTPException(status_code=404, detail=f"unknown image kind {kind!r}")
        path = store.image_path(rec.id, kind, view)
        if not path.exists():
            raise HTTPException(status_code=404, detail="no such view")
        return Response(content=path.read_bytes(), media_type="image/png")

    @app.post("/api/frames/{frame_id}/edits")
    def post_edits(frame_id: str, batch: EditBatch) -> dict:
        rec = get_frame(frame_id)
        now_ms = int(time.time() * 1000)
        edits = [
            Edit(e.z, e.y, e.x, e.label, e.author, e.ts if e.ts is not None else now_ms)
            for e in batch.edits
        ]
        try:
            length = store.append_edits(rec.id, edits, token=batch.token)
        except PermissionError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except (IndexError, ValueError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return {"journal_length": length}

    @app.get("/api/frames/{frame_id}/preview")
    def preview(frame_id: str) -> dict:
        rec = get_frame(frame_id)
        try:
            dense = store.preview(rec.id)
        except FileNotFoundError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        return _sparse_obj(SparseOccupancy.from_dense(dense))

    @app.post("/api/frames/{frame_id}/finalize")
    def finalize(frame_id: str) -> dict:
        rec = get_frame(frame_id)
        try:
            final = store.finalize(rec.id)
        except PermissionError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except FileNotFoundError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        return {
            "id": rec.id,
            "status": "finalized",
            "occupied_count": int(final.labels.shape[0]),
        }

    return app


def app_from_env() -> FastAPI:
    """App factory for `uvicorn occkit.service:app_from_env --factory`."""
    from .store import data_dir_from_env

    return create_app(FrameStore(Path(data_dir_from_env())))
