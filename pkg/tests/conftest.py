"""Shared fixtures: a small scene and grids cheap enough for unit tests.

The full standard grid (40x512x512) only appears in the acceptance
suite; everything here runs on reduced extents so the whole module
suite stays fast on one core.
"""

from __future__ import annotations

import numpy as np
import pytest

from occkit.grid import GridSpec
from occkit.synth import (
    SceneConfig,
    build_frame_sensor_data,
    generate_scene,
    ground_truth_occupancy,
)
from occkit.synth.scene import CameraRigConfig, LidarConfig


SMALL_CONFIG = SceneConfig(
    extent=25.6,
    object_count=3,
    frame_count=3,
    camera=CameraRigConfig(width=80, height=60),
    lidar=LidarConfig(channels=6, azimuth_steps=180),
)

# covers the small scene at 0.8 m; dims divisible by 16 in (H,W)
SMALL_SPEC = GridSpec.from_ranges(
    (-25.6, 25.6), (-25.6, 25.6), (-3.2, 3.2), 0.8
)


@pytest.fixture(scope="session")
def small_config():
    return SMALL_CONFIG


@pytest.fixture(scope="session")
def small_scene():
    return generate_scene(seed=7, config=SMALL_CONFIG)


@pytest.fixture(scope="session")
def small_frame(small_scene):
    return build_frame_sensor_data(small_scene, 1)


@pytest.fixture(scope="session")
def small_gt(small_scene):
    return ground_truth_occupancy(small_scene, 1, SMALL_SPEC)


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
