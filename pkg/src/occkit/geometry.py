"""Rigid transforms, pinhole cameras, point clouds, and oriented boxes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Pose:
    """Rigid transform: applies p' = R @ p + t.

    Named by direction, e.g. a pose ``world_from_ego`` maps ego-frame
    points into world frame.
    """

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=np.float64).reshape(3, 3)
        t = np.asarray(self.translation, dtype=np.float64).reshape(3)
        err = np.abs(r @ r.T - np.eye(3)).max()
        if err > 1e-9:
            raise ValueError(f"rotation not orthonormal (max err {err:.2e})")
        if abs(np.linalg.det(r) - 1.0) > 1e-9:
            raise ValueError("rotation determinant != 1")
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "Pose":
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_yaw(cls, yaw: float, translation=(0.0, 0.0, 0.0)) -> "Pose":
        c, s = np.cos(yaw), np.sin(yaw)
        r = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
        return cls(r, np.asarray(translation, dtype=np.float64))

    def apply(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=np.float64)
        return p @ self.rotation.T + self.translation

    def compose(self, other: "Pose") -> "Pose":
        """self after other: (self . other)(p) = self(other(p))."""
        return Pose(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    def inverse(self) -> "Pose":
        rt = self.rotation.T
        return Pose(rt, -(rt @ self.translation))


@dataclass(frozen=True)
class CameraModel:
    """Pinhole camera: intrinsics plus the cam_from_world extrinsic pose.

    ``cam_from_world`` maps points from the frame the camera's captures
    are expressed against (the frame's reference frame) into camera
    coordinates, where +z is the viewing direction, +x right, +y down.
    """

    name: str
    width: int
    height: int
    fx: float
    fy: float
    cx: float
    cy: float
    cam_from_world: Pose

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point outside image")

    def intrinsics(self) -> np.ndarray:
        return np.array(
            [
                [self.fx, 0.0, self.cx],
                [0.0, self.fy, self.cy],
                [0.0, 0.0, 1.0],
            ]
        )


def project_to_camera(cam: CameraModel, points) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Project reference-frame points through a pinhole camera.

    Returns (uv (N,2), depth (N,), valid (N,) bool).  A point is valid iff
    its camera-frame depth exceeds 1e-6 and the projected pixel center
    lands inside the image: 0 <= u < width, 0 <= v < height.  uv/depth for
    invalid points are left as computed (callers must mask).
    """
    p_cam = cam.cam_from_world.apply(points)
    z = p_cam[..., 2]
    safe_z = np.where(np.abs(z) > 1e-12, z, 1e-12)
    u = cam.fx * p_cam[..., 0] / safe_z + cam.cx
    v = cam.fy * p_cam[..., 1] / safe_z + cam.cy
    valid = (
        (z > 1e-6)
        & (u >= 0.0)
        & (u < cam.width)
        & (v >= 0.0)
        & (v < cam.height)
    )
    return np.stack([u, v], axis=-1), z, valid


@dataclass
class PointCloud:
    """Points (N,3) float64 with per-point labels and instance ids.

    ``instance_ids`` is -1 for static points; dynamic points carry the
    id of the object track they belong to.
    """

    points: np.ndarray
    labels: np.ndarray
    instance_ids: np.ndarray | None = None

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        self.labels = np.asarray(self.labels, dtype=np.uint8).reshape(-1)
        if self.instance_ids is None:
            self.instance_ids = np.full(len(self.labels), -1, dtype=np.int32)
        else:
            self.instance_ids = np.asarray(
                self.instance_ids, dtype=np.int32
            ).reshape(-1)
        if not (
            self.points.shape[0]
            == self.labels.shape[0]
            == self.instance_ids.shape[0]
        ):
            raise ValueError("points, labels, instance_ids length mismatch")

    def __len__(self) -> int:
        return self.points.shape[0]

    def transformed(self, pose: Pose) -> "PointCloud":
        return PointCloud(
            pose.apply(self.points), self.labels.copy(), self.instance_ids.copy()
        )

    @classmethod
    def concatenate(cls, clouds: list["PointCloud"]) -> "PointCloud":
        if not clouds:
            return cls(np.zeros((0, 3)), np.zeros(0, dtype=np.uint8))
        return cls(
            np.concatenate([c.points for c in clouds], axis=0),
            np.concatenate([c.labels for c in clouds], axis=0),
            np.concatenate([c.instance_ids for c in clouds], axis=0),
        )


@dataclass(frozen=True)
class BoundingBox:
    """Yaw-oriented box: center (x,y,z), size (length lx, width ly, height lz)."""

    center: tuple[float, float, float]
    size: tuple[float, float, float]
    yaw: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))
        object.__setattr__(self, "size", tuple(float(v) for v in self.size))
        object.__setattr__(self, "yaw", float(self.yaw))
        if any(s <= 0 for s in self.size):
            raise ValueError("box size must be positive")

    def pose(self) -> Pose:
        """world_from_box: box frame has origin at center, x along length."""
        return Pose.from_yaw(self.yaw, self.center)

    def contains(self, points) -> np.ndarray:
        """Boolean mask of points inside the closed box."""
        local = self.pose().inverse().apply(points)
        half = np.asarray(self.size) / 2.0
        return (np.abs(local) <= half).all(axis=-1)

    def corners(self) -> np.ndarray:
        """(8,3) world-frame corner coordinates."""
        hx, hy, hz = (s / 2.0 for s in self.size)
        local = np.array(
            [
                [sx, sy, sz]
                for sx in (-hx, hx)
                for sy in (-hy, hy)
                for sz in (-hz, hz)
            ]
        )
        return self.pose().apply(local)
