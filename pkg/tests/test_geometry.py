"""Poses, pinhole projection, point clouds, oriented boxes.

Projection examples are hand-computed from u = fx*x/z + cx,
v = fy*y/z + cy with +z forward, +x right, +y down.
"""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from occkit.geometry import (
    BoundingBox,
    CameraModel,
    PointCloud,
    Pose,
    project_to_camera,
)


def _cam(width=128, height=128, fx=100.0, fy=100.0, cx=64.0, cy=64.0,
         pose=None) -> CameraModel:
    return CameraModel(
        name="cam",
        width=width,
        height=height,
        fx=fx,
        fy=fy,
        cx=cx,
        cy=cy,
        cam_from_world=pose or Pose.identity(),
    )


# ── Pose ─────────────────────────────────────────────────────────────────

def test_identity_pose_is_noop():
    p = np.array([[1.0, 2.0, 3.0]])
    np.testing.assert_array_equal(Pose.identity().apply(p), p)


def test_yaw_rotates_about_z():
    pose = Pose.from_yaw(np.pi / 2)
    np.testing.assert_allclose(
        pose.apply(np.array([1.0, 0.0, 0.0])), (0.0, 1.0, 0.0), atol=1e-12
    )


def test_compose_then_inverse_is_identity():
    pose = Pose.from_yaw(0.7, translation=(1.0, -2.0, 0.5))
    round_trip = pose.compose(pose.inverse())
    pts = np.random.default_rng(0).normal(size=(20, 3))
    np.testing.assert_allclose(round_trip.apply(pts), pts, atol=1e-9)


def test_compose_matches_sequential_application():
    a = Pose.from_yaw(0.3, translation=(1.0, 0.0, 0.0))
    b = Pose.from_yaw(-1.1, translation=(0.0, 2.0, -1.0))
    pts = np.random.default_rng(1).normal(size=(10, 3))
    np.testing.assert_allclose(
        a.compose(b).apply(pts), a.apply(b.apply(pts)), atol=1e-12
    )


@given(
    yaw=st.floats(-3.1, 3.1),
    tx=st.floats(-10, 10),
    ty=st.floats(-10, 10),
)
@settings(max_examples=50)
def test_inverse_property(yaw, tx, ty):
    pose = Pose.from_yaw(yaw, translation=(tx, ty, 0.0))
    p = np.array([0.5, -1.5, 2.0])
    np.testing.assert_allclose(
        pose.inverse().apply(pose.apply(p)), p, atol=1e-9
    )


def test_pose_rejects_non_rotation():
    with pytest.raises(ValueError):
        Pose(rotation=np.eye(3) * 2.0, translation=np.zeros(3))


# ── projection ───────────────────────────────────────────────────────────

def test_project_optical_axis():
    uv, depth, valid = project_to_camera(_cam(), np.array([0.0, 0.0, 2.0]))
    np.testing.assert_allclose(uv, (64.0, 64.0))
    assert depth == pytest.approx(2.0)
    assert bool(valid)


def test_project_behind_camera_invalid():
    _, _, valid = project_to_camera(_cam(), np.array([0.0, 0.0, -1.0]))
    assert not bool(valid)


def test_project_out_of_frame_invalid():
    # u = 100*1/1 + 64 = 164 >= 128
    uv, _, valid = project_to_camera(_cam(), np.array([1.0, 0.0, 1.0]))
    assert uv[0] == pytest.approx(164.0)
    assert not bool(valid)


def test_project_vectorized_matches_scalar():
    cam = _cam(pose=Pose.from_yaw(0.4, translation=(0.1, -0.2, 0.3)))
    pts = np.random.default_rng(2).normal(size=(50, 3)) * 3.0
    uv, depth, valid = project_to_camera(cam, pts)
    for i in range(len(pts)):
        u1, d1, v1 = project_to_camera(cam, pts[i])
        np.testing.assert_allclose(uv[i], u1, atol=1e-12)
        assert depth[i] == pytest.approx(d1)
        assert valid[i] == v1


def test_camera_model_validation():
    with pytest.raises(ValueError):
        _cam(fx=-1.0)
    with pytest.raises(ValueError):
        _cam(cx=300.0)


def test_intrinsics_matrix():
    K = _cam().intrinsics()
    np.testing.assert_array_equal(
        K, [[100.0, 0.0, 64.0], [0.0, 100.0, 64.0], [0.0, 0.0, 1.0]]
    )


# ── point cloud ──────────────────────────────────────────────────────────

def test_point_cloud_transform_and_concat():
    pc = PointCloud(
        np.array([[1.0, 0.0, 0.0]]),
        np.array([4], dtype=np.uint8),
        np.array([-1], dtype=np.int32),
    )
    moved = pc.transformed(Pose.from_yaw(np.pi / 2))
    np.testing.assert_allclose(moved.points, [[0.0, 1.0, 0.0]], atol=1e-12)
    both = PointCloud.concatenate([pc, moved])
    assert len(both) == 2
    np.testing.assert_array_equal(both.labels, [4, 4])


def test_point_cloud_shape_validation():
    with pytest.raises(ValueError):
        PointCloud(
            np.zeros((3, 2)),
            np.zeros(3, dtype=np.uint8),
            np.zeros(3, dtype=np.int32),
        )
    with pytest.raises(ValueError):
        PointCloud(
            np.zeros((3, 3)),
            np.zeros(2, dtype=np.uint8),
            np.zeros(3, dtype=np.int32),
        )


# ── bounding box ─────────────────────────────────────────────────────────

def test_box_contains_axis_aligned():
    box = BoundingBox(center=(0.0, 0.0, 0.0), size=(2.0, 4.0, 6.0), yaw=0.0)
    inside = np.array([[0.9, 1.9, 2.9], [0.0, 0.0, 0.0]])
    outside = np.array([[1.1, 0.0, 0.0], [0.0, 2.1, 0.0], [0.0, 0.0, 3.1]])
    assert box.contains(inside).all()
    assert not box.contains(outside).any()


def test_box_contains_respects_yaw():
    box = BoundingBox(center=(0.0, 0.0, 0.0), size=(2.0, 0.2, 2.0), yaw=np.pi / 2)
    # the long x-extent now lies along +y
    assert bool(box.contains(np.array([0.0, 0.9, 0.0])))
    assert not bool(box.contains(np.array([0.9, 0.0, 0.0])))


def test_box_corners_are_contained_boundary():
    box = BoundingBox(center=(1.0, 2.0, 3.0), size=(2.0, 2.0, 2.0), yaw=0.3)
    corners = box.corners()
    assert corners.shape == (8, 3)
    # nudge corners toward the center: all strictly inside
    nudged = corners + 1e-6 * (np.array(box.center) - corners)
    assert box.contains(nudged).all()


def test_box_pose_places_local_origin_at_center():
    box = BoundingBox(center=(1.0, -2.0, 0.5), size=(2.0, 2.0, 2.0), yaw=1.2)
    np.testing.assert_allclose(
        box.pose().apply(np.zeros(3)), (1.0, -2.0, 0.5), atol=1e-12
    )
