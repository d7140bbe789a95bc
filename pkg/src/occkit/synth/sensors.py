"""Simulated sensors: surround camera rig, ray-cast renderer, LiDAR.

All sensor outputs are expressed in the EGO frame of their frame index
(the frame the standard grid is anchored to); the simulator composes
the ego pose internally to query world-frame scene geometry.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..geometry import CameraModel, PointCloud, Pose
from ..grid import EMPTY_ID
from .scene import Scene

_SURFACE_EPS = 1e-6  # meters; nudges hit points just inside the solid


def camera_rig(config) -> list[CameraModel]:
    """Surround rig: ``count`` cameras yaw-spaced 360/count degrees.

    Each camera sits at (0, 0, height_m) in the ego frame, pitched
    ``pitch_deg`` from horizontal.  Camera axes: +z viewing direction,
    +x image right, +y image down.
    """
    cams = []
    fov = np.deg2rad(config.fov_deg)
    fx = (config.width / 2.0) / np.tan(fov / 2.0)
    pitch = np.deg2rad(config.pitch_deg)
    for k in range(config.count):
        yaw = 2.0 * np.pi * k / config.count
        cy, sy = np.cos(yaw), np.sin(yaw)
        cp, sp = np.cos(pitch), np.sin(pitch)
        forward = np.array([cy * cp, sy * cp, sp])
        right = np.array([sy, -cy, 0.0])
        down = np.cross(forward, right)
        r_ego_from_cam = np.stack([right, down, forward], axis=1)
        ego_from_cam = Pose(r_ego_from_cam, (0.0, 0.0, config.height_m))
        cams.append(
            CameraModel(
                name=f"cam{k}",
                width=config.width,
                height=config.height,
                fx=fx,
                fy=fx,
                cx=config.width / 2.0,
                cy=config.height / 2.0,
                cam_from_world=ego_from_cam.inverse(),
            )
        )
    return cams


def render_views(
    scene: Scene, frame_index: int
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Per-camera (semantic label image uint8, optical-axis depth image).

    Pixel (row j, col i) casts a ray through pixel center (i+0.5, j+0.5).
    Misses store label=empty and depth=0; depth is the hit's camera-frame
    z (not the ray range).
    """
    prims = scene.frame_primitives(frame_index)
    ego = scene.ego_poses[frame_index]
    cams = camera_rig(scene.config.camera)
    max_range = scene.config.lidar.max_range
    semantic_images = []
    depth_images = []
    for cam in cams:
        jj, ii = np.meshgrid(
            np.arange(cam.height), np.arange(cam.width), indexing="ij"
        )
        u = ii + 0.5
        v = jj + 0.5
        dirs_cam = np.stack(
            [
                (u - cam.cx) / cam.fx,
                (v - cam.cy) / cam.fy,
                np.ones_like(u, dtype=np.float64),
            ],
            axis=-1,
        ).reshape(-1, 3)
        norms = np.linalg.norm(dirs_cam, axis=1)
        world_from_cam = ego.compose(cam.cam_from_world.inverse())
        dirs_w = (dirs_cam / norms[:, None]) @ world_from_cam.rotation.T
        origin_w = world_from_cam.translation
        origins = np.broadcast_to(origin_w, dirs_w.shape)
        t, idx = prims.raycast(origins, dirs_w, max_range)
        hit = idx >= 0
        labels = np.full(t.shape, EMPTY_ID, dtype=np.uint8)
        labels[hit] = prims.labels[idx[hit]]
        depth = np.zeros(t.shape)
        depth[hit] = t[hit] / norms[hit]  # range -> optical-axis z
        semantic_images.append(labels.reshape(cam.height, cam.width))
        depth_images.append(depth.reshape(cam.height, cam.width))
    return semantic_images, depth_images


def simulate_lidar(
    scene: Scene,
    frame_index: int,
    channels: int | None = None,
    azimuth_steps: int | None = None,
) -> PointCloud:
    """Spinning-scanner simulation; returns ego-frame labeled points.

    Rays fan out from (0, 0, height_m) over ``channels`` elevation rings
    spanning [elev_min, elev_max] degrees, times ``azimuth_steps``
    azimuths.  Hit points are nudged a hair along the ray so they sit
    strictly inside the hit solid (robust containment queries).
    """
    lidar = scene.config.lidar
    channels = lidar.channels if channels is None else channels
    azimuth_steps = lidar.azimuth_steps if azimuth_steps is None else azimuth_steps
    if channels < 1 or azimuth_steps < 1:
        raise ValueError("channels and azimuth_steps must be >= 1")

    elev = np.deg2rad(np.linspace(lidar.elev_min_deg, lidar.elev_max_deg, channels))
    azim = np.arange(azimuth_steps) * (2.0 * np.pi / azimuth_steps)
    ce, se = np.cos(elev), np.sin(elev)
    ca, sa = np.cos(azim), np.sin(azim)
    dirs_ego = np.stack(
        [
            np.outer(ce, ca).ravel(),
            np.outer(ce, sa).ravel(),
            np.repeat(se, azimuth_steps),
        ],
        axis=1,
    )
    ego = scene.ego_poses[frame_index]
    origin_w = ego.apply(np.array([0.0, 0.0, lidar.height_m]))
    dirs_w = dirs_ego @ ego.rotation.T
    prims = scene.frame_primitives(frame_index)
    origins = np.broadcast_to(origin_w, dirs_w.shape)
    t, idx = prims.raycast(origins, dirs_w, lidar.max_range)
    hit = idx >= 0
    points_w = origins[hit] + (t[hit] + _SURFACE_EPS)[:, None] * dirs_w[hit]
    labels = prims.labels[idx[hit]].astype(np.uint8)
    instances = prims.instance_ids[idx[hit]]
    points_ego = ego.inverse().apply(points_w)
    return PointCloud(points_ego, labels, instances)


@dataclass
class FrameSensorData:
    """Everything the pipelines consume for one frame, in its ego frame."""

    frame_index: int
    point_cloud: PointCloud
    cameras: list[CameraModel]
    semantic_images: list[np.ndarray]
    depth_images: list[np.ndarray]


def build_frame_sensor_data(
    scene: Scene,
    frame_index: int,
    channels: int | None = None,
    azimuth_steps: int | None = None,
) -> FrameSensorData:
    semantic_images, depth_images = render_views(scene, frame_index)
    return FrameSensorData(
        frame_index=frame_index,
        point_cloud=simulate_lidar(scene, frame_index, channels, azimuth_steps),
        cameras=camera_rig(scene.config.camera),
        semantic_images=semantic_images,
        depth_images=depth_images,
    )
