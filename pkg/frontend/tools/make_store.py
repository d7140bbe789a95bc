"""Build the labeler test fixture: a small frame store plus a pixel-pick
oracle computed with the service's own projection code.

    python3 tools/make_store.py <store_dir> <oracle_json>

The store gets a desk-scale scene, per-frame sensor data, superimposed
initial annotations, and an augmented grid on f001 (initial labels plus
one upward neighbor per occupied voxel, so densification is visible but
the grid stays small enough to serve as JSON).  The oracle file lists 50
pixels with served depth and the voxel index the server-side math
resolves them to.
"""

from __future__ import annotations

import json
import subprocess
import sys
from pathlib import Path

import numpy as np

from occkit.geometry import project_to_camera
from occkit.grid import EMPTY_ID, GridSpec, SparseOccupancy, world_to_voxel
from occkit.store import FrameStore

CONFIG = {
    "extent": 25.6,
    "object_count": 3,
    "frame_count": 3,
    "camera": {"width": 80, "height": 60},
    "lidar": {"channels": 6, "azimuth_steps": 180},
}
ORACLE_SAMPLES = 50


def build_store(root: Path) -> None:
    cfg_path = root.parent / "fixture_config.json"
    cfg_path.write_text(json.dumps(CONFIG))
    for argv in (
        ["occkit", "gen", "--seed", "7", "--config", str(cfg_path), "--out", str(root)],
        ["occkit", "superimpose", "--data", str(root)],
    ):
        subprocess.run(argv, check=True, capture_output=True, text=True)

    # densify f001 by hand: keep every initial voxel and add its +z
    # neighbor where empty (the fitted predictors flood uncovered space
    # with pseudo labels, which is far too dense to serve to a browser)
    store = FrameStore(root)
    dense = store.load_grid("f001", "v_init").to_dense()
    d = dense.labels.shape[0]
    occupied = dense.labels != EMPTY_ID
    shifted = np.zeros_like(occupied)
    shifted[1:d] = occupied[0 : d - 1]
    grow = shifted & ~occupied
    dense.labels[grow] = np.roll(dense.labels, 1, axis=0)[grow]
    store.save_grid("f001", "v_aug", SparseOccupancy.from_dense(dense))
    store.set_status("f001", "augmented")


def build_oracle(root: Path, out: Path) -> None:
    store = FrameStore(root)
    cams = store.load_cameras("f001")
    _, depths = store.load_images("f001")
    spec = GridSpec.standard()
    samples: list[dict] = []
    per_view = ORACLE_SAMPLES // len(cams) + 1
    for k, cam in enumerate(cams):
        dep = depths[k]
        hits = np.argwhere(dep > 0)
        if hits.shape[0] == 0:
            continue
        stride = max(1, hits.shape[0] // per_view)
        for j, i in hits[::stride]:
            z = float(dep[j, i])
            u, v = float(i) + 0.5, float(j) + 0.5
            p_cam = np.array(
                [(u - cam.cx) / cam.fx * z, (v - cam.cy) / cam.fy * z, z]
            )
            p_ref = cam.cam_from_world.inverse().apply(p_cam)
            uv, depth, valid = project_to_camera(cam, p_ref[None])
            assert valid[0] and abs(uv[0, 0] - u) < 1e-9 and abs(uv[0, 1] - v) < 1e-9
            assert abs(depth[0] - z) < 1e-9
            g = world_to_voxel(spec, p_ref)
            idx = np.floor(g).astype(int)
            if not (
                0 <= idx[0] < spec.dims[0]
                and 0 <= idx[1] < spec.dims[1]
                and 0 <= idx[2] < spec.dims[2]
            ):
                continue
            samples.append(
                {
                    "view": k,
                    "i": int(i),
                    "j": int(j),
                    "voxel": [int(idx[0]), int(idx[1]), int(idx[2])],
                }
            )
    if len(samples) < ORACLE_SAMPLES:
        raise SystemExit(f"only {len(samples)} oracle samples; need {ORACLE_SAMPLES}")
    out.write_text(json.dumps(samples[:ORACLE_SAMPLES]))


def main() -> None:
    if len(sys.argv) != 3:
        raise SystemExit(__doc__)
    root = Path(sys.argv[1])
    build_store(root)
    build_oracle(root, Path(sys.argv[2]))
    print(f"fixture store at {root}")


if __name__ == "__main__":
    main()
