"""Deterministic synthetic scenes, sensors, and ground truth."""

from .groundtruth import ground_truth_occupancy
from .primitives import PrimitiveSet, box_row, bounding_box_row, cylinder_row
from .scene import (
    CameraRigConfig,
    LidarConfig,
    ObjectTrack,
    Scene,
    SceneConfig,
    canonical_json,
    generate_scene,
    scene_with_config,
    validate_config,
)
from .sensors import (
    FrameSensorData,
    build_frame_sensor_data,
    camera_rig,
    render_views,
    simulate_lidar,
)

__all__ = [
    "CameraRigConfig",
    "FrameSensorData",
    "LidarConfig",
    "ObjectTrack",
    "PrimitiveSet",
    "Scene",
    "SceneConfig",
    "bounding_box_row",
    "box_row",
    "build_frame_sensor_data",
    "camera_rig",
    "canonical_json",
    "cylinder_row",
    "generate_scene",
    "ground_truth_occupancy",
    "render_views",
    "scene_with_config",
    "simulate_lidar",
    "validate_config",
]
