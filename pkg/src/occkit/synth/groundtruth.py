"""Analytic ground-truth occupancy for synthetic scenes."""

from __future__ import annotations

import numpy as np

from ..grid import DenseLabelGrid, EMPTY_ID, GridSpec
from .scene import Scene


def ground_truth_occupancy(
    scene: Scene, frame_index: int, spec: GridSpec, chunk_z: int = 4
) -> DenseLabelGrid:
    """Label of the solid containing each voxel center, else empty.

    The grid is anchored to the ego frame of ``frame_index``; movable
    objects are placed at their boxes for that frame.  Processed in z
    slabs (a full standard center array is ~250 MB).
    """
    prims = scene.frame_primitives(frame_index)
    ego = scene.ego_poses[frame_index]
    d, h, w = spec.dims
    vs = spec.voxel_size
    yc = spec.origin[1] + (np.arange(h) + 0.5) * vs
    xc = spec.origin[0] + (np.arange(w) + 0.5) * vs
    gy, gx = np.meshgrid(yc, xc, indexing="ij")
    labels = np.full(spec.dims, EMPTY_ID, dtype=np.uint8)
    for z0 in range(0, d, chunk_z):
        z1 = min(z0 + chunk_z, d)
        nz = z1 - z0
        centers = np.empty((nz, h, w, 3))
        centers[..., 0] = gx[None]
        centers[..., 1] = gy[None]
        centers[..., 2] = (
            spec.origin[2] + (np.arange(z0, z1) + 0.5)[:, None, None] * vs
        )
        world = ego.apply(centers.reshape(-1, 3))
        idx = prims.contains_index(world)
        hit = idx >= 0
        slab = np.full(idx.shape, EMPTY_ID, dtype=np.uint8)
        slab[hit] = prims.labels[idx[hit]]
        labels[z0:z1] = slab.reshape(nz, h, w)
    return DenseLabelGrid(spec, labels)
