"""Fixed-weight encoders, fusion, decoder, head, and the cost model.

Hand-traced single-point lidar case (spec8 below, stride 2):
  point (0.3, 0.4, 0.2) labeled car -> fine voxel (z,y,x) = (0,0,0);
  raw = [log1p(1), 0.2 - 0.25, one-hot-17(car)]; the stride-2 block
  holds 8 fine voxels so pooling divides by 8.  The encoder output must
  equal box_filter(place(raw/8) @ P^T) bit for bit.

One-pixel camera case: identity camera fx=fy=100, cx=cy=64, pixel
(i=80, j=40) at depth 5 -> point ((80.5-64)/100*5, (40.5-64)/100*5, 5)
= (0.825, -1.175, 5.0); with origin (-2,-2,0) and 0.5 m voxels the
fine index is (z,y,x) = (10,1,5) and the stride-2 coarse index (5,0,2).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from occkit.geometry import CameraModel, PointCloud, Pose
from occkit.grid import GridSpec, LABELS, world_to_voxel
from occkit.network import (
    CAMERA_RAW_CHANNELS,
    EncoderConfig,
    HeadConfig,
    LIDAR_RAW_CHANNELS,
    _SALT_CAMERA_PROJ,
    _SALT_LIDAR_PROJ,
    adaptive_fuse,
    baseline_forward,
    camera_encode,
    decode_and_head,
    encode_features,
    fixed_matrix,
    flop_count,
    lidar_encode,
    load_head,
    memory_estimate,
    softmax,
)
from occkit.sampling import FeatureVolume, box_filter_3x3x3

CAR = LABELS.id_of("car")
SIDEWALK = LABELS.id_of("sidewalk")

SPEC8 = GridSpec((0.0, 0.0, 0.0), 0.5, (8, 8, 8))
CFG2 = EncoderConfig(stride=2, channels=16)
SMALL_SPEC = GridSpec.from_ranges((-25.6, 25.6), (-25.6, 25.6), (-3.2, 3.2), 0.8)


def _empty_cloud() -> PointCloud:
    return PointCloud(np.zeros((0, 3)), np.zeros(0, dtype=np.uint8))


def _identity_cam(width=128, height=128) -> CameraModel:
    return CameraModel(
        name="cam",
        width=width,
        height=height,
        fx=100.0,
        fy=100.0,
        cx=64.0,
        cy=64.0,
        cam_from_world=Pose.identity(),
    )


@dataclass
class _Frame:
    """Duck-typed sensor frame for encode_features."""

    point_cloud: PointCloud
    semantic_images: list = field(default_factory=list)
    depth_images: list = field(default_factory=list)
    cameras: list = field(default_factory=list)


def _volume(rng, dims=(4, 4, 4), channels=16, spec=None) -> FeatureVolume:
    spec = spec or GridSpec((0.0, 0.0, 0.0), 1.0, dims)
    return FeatureVolume(spec, rng.normal(size=(*dims, channels)))


# ── fixed projection matrices ────────────────────────────────────────


def test_fixed_matrix_deterministic_and_bounded():
    a = fixed_matrix(0x11DA, 16, 19)
    b = fixed_matrix(0x11DA, 16, 19)
    np.testing.assert_array_equal(a, b)
    assert a.shape == (16, 19)
    assert (np.abs(a) <= np.sqrt(3.0 / 19)).all()
    assert np.abs(fixed_matrix(0xCA3E, 16, 19) - a).max() > 1e-3


# ── configs ──────────────────────────────────────────────────────────


def test_encoder_config_validation():
    assert EncoderConfig().stride == 4
    assert EncoderConfig().decoder_channels == 48
    with pytest.raises(ValueError):
        EncoderConfig(stride=3)
    with pytest.raises(ValueError):
        EncoderConfig(scales=2)


def test_coarse_spec_of_standard_grid():
    coarse = EncoderConfig(stride=4).coarse_spec(GridSpec.standard())
    assert coarse.dims == (10, 128, 128)
    assert coarse.voxel_size == pytest.approx(0.8)


def test_head_config_round_trip_and_validation(rng):
    head = HeadConfig(12, rng.normal(size=(18, 12)), rng.normal(size=18))
    back = HeadConfig.from_json_obj(head.to_json_obj())
    np.testing.assert_array_equal(back.weights, head.weights)
    np.testing.assert_array_equal(back.bias, head.bias)
    with pytest.raises(ValueError, match="finite"):
        HeadConfig(12, np.full((18, 12), np.nan), np.zeros(18))


def test_shipped_heads_load():
    for modality in ("camera", "lidar", "multimodal"):
        head = load_head(modality)
        assert head.input_channels == 48
        assert head.weights.shape == (18, 48)


# ── lidar encoder ────────────────────────────────────────────────────


def test_lidar_encode_empty_cloud_is_zero():
    out = lidar_encode(_empty_cloud(), SPEC8, CFG2)
    assert out.values.shape == (4, 4, 4, 16)
    assert (out.values == 0.0).all()


def test_lidar_encode_single_point_hand_trace():
    cloud = PointCloud(np.array([[0.3, 0.4, 0.2]]), [CAR])
    out = lidar_encode(cloud, SPEC8, CFG2)

    raw = np.zeros(LIDAR_RAW_CHANNELS)
    raw[0] = np.log1p(1.0)
    raw[1] = 0.2 - 0.25  # z minus the fine voxel center z
    raw[2 + CAR] = 1.0
    hist = raw[2:]
    assert hist[CAR] == 1.0 and (np.delete(hist, CAR) == 0.0).all()

    pooled = np.zeros((4, 4, 4, LIDAR_RAW_CHANNELS))
    pooled[0, 0, 0] = raw / 8.0  # stride-2 block mean
    proj = fixed_matrix(_SALT_LIDAR_PROJ, 16, LIDAR_RAW_CHANNELS)
    expect = box_filter_3x3x3(pooled @ proj.T)
    np.testing.assert_array_equal(out.values, expect)


def test_lidar_encode_permutation_invariant(small_frame):
    pc = small_frame.point_cloud
    perm = np.random.default_rng(3).permutation(len(pc))
    shuffled = PointCloud(pc.points[perm], pc.labels[perm], pc.instance_ids[perm])
    a = lidar_encode(pc, SMALL_SPEC, CFG2)
    b = lidar_encode(shuffled, SMALL_SPEC, CFG2)
    np.testing.assert_array_equal(a.values, b.values)


def test_lidar_encode_superposition_on_disjoint_voxels():
    # points in distinct fine voxels: pooled raws add, and the map and
    # smoothing are linear, so the volumes add (up to matmul rounding)
    pts_a = np.array([[0.25, 0.25, 0.25], [1.25, 0.25, 0.25]])
    pts_b = np.array([[2.25, 2.25, 2.25], [3.75, 3.75, 3.75]])
    a = lidar_encode(PointCloud(pts_a, [CAR, CAR]), SPEC8, CFG2)
    b = lidar_encode(PointCloud(pts_b, [SIDEWALK, SIDEWALK]), SPEC8, CFG2)
    both = lidar_encode(
        PointCloud(np.vstack([pts_a, pts_b]), [CAR, CAR, SIDEWALK, SIDEWALK]),
        SPEC8,
        CFG2,
    )
    np.testing.assert_allclose(both.values, a.values + b.values, atol=1e-12)


def test_lidar_encode_rejects_nonsemantic_labels():
    cloud = PointCloud(np.array([[0.3, 0.4, 0.2]]), [17])
    with pytest.raises(ValueError, match="labels"):
        lidar_encode(cloud, SPEC8, CFG2)


# ── camera encoder ───────────────────────────────────────────────────

CAM_SPEC = GridSpec((-2.0, -2.0, 0.0), 0.5, (16, 16, 16))


def test_camera_encode_no_depth_is_zero():
    sem = np.zeros((128, 128), dtype=np.uint8)
    dep = np.zeros((128, 128))
    out = camera_encode([sem], [dep], [_identity_cam()], CAM_SPEC, CFG2)
    assert (out.values == 0.0).all()


def test_camera_encode_one_pixel_hand_trace():
    sem = np.zeros((128, 128), dtype=np.uint8)
    dep = np.zeros((128, 128))
    sem[40, 80] = SIDEWALK
    dep[40, 80] = 5.0
    out = camera_encode([sem], [dep], [_identity_cam()], CAM_SPEC, CFG2)

    p = np.array([0.825, -1.175, 5.0])
    fine = np.floor(world_to_voxel(CAM_SPEC, p)).astype(int)
    np.testing.assert_array_equal(fine, [10, 1, 5])
    coarse = fine // 2

    raw = np.zeros(CAMERA_RAW_CHANNELS)
    raw[SIDEWALK] = 1.0
    raw[17] = 1.0 / 6.0
    mean = np.zeros((8, 8, 8, CAMERA_RAW_CHANNELS))
    mean[tuple(coarse)] = raw
    proj = fixed_matrix(_SALT_CAMERA_PROJ, 16, CAMERA_RAW_CHANNELS)
    expect = box_filter_3x3x3(mean @ proj.T)
    np.testing.assert_array_equal(out.values, expect)


def test_camera_encode_two_pixels_mean():
    # rows 40 and 41 at depth 5 differ by 0.05 m in y: same fine voxel
    sem = np.zeros((128, 128), dtype=np.uint8)
    dep = np.zeros((128, 128))
    sem[40, 80] = SIDEWALK
    sem[41, 80] = CAR
    dep[40, 80] = 5.0
    dep[41, 80] = 5.0
    out = camera_encode([sem], [dep], [_identity_cam()], CAM_SPEC, CFG2)

    raw_a = np.zeros(CAMERA_RAW_CHANNELS)
    raw_a[SIDEWALK] = 1.0
    raw_a[17] = 1.0 / 6.0
    raw_b = np.zeros(CAMERA_RAW_CHANNELS)
    raw_b[CAR] = 1.0
    raw_b[17] = 1.0 / 6.0
    mean = np.zeros((8, 8, 8, CAMERA_RAW_CHANNELS))
    mean[5, 0, 2] = (raw_a + raw_b) / 2.0
    proj = fixed_matrix(_SALT_CAMERA_PROJ, 16, CAMERA_RAW_CHANNELS)
    expect = box_filter_3x3x3(mean @ proj.T)
    np.testing.assert_array_equal(out.values, expect)


def test_camera_encode_full_rig(small_frame):
    out = camera_encode(
        small_frame.semantic_images,
        small_frame.depth_images,
        small_frame.cameras,
        SMALL_SPEC,
        EncoderConfig(stride=4),
    )
    assert out.values.shape == (2, 16, 16, 16)
    assert np.isfinite(out.values).all()
    assert np.abs(out.values).max() > 0


# ── adaptive fusion ──────────────────────────────────────────────────


def test_fuse_equal_inputs_pass_through(rng):
    v = _volume(rng)
    out = adaptive_fuse(v, FeatureVolume(v.spec, v.values.copy()))
    np.testing.assert_array_equal(out.values, v.values)


def test_fuse_zero_inputs_stay_zero():
    z = FeatureVolume(GridSpec((0.0, 0.0, 0.0), 1.0, (4, 4, 4)), np.zeros((4, 4, 4, 16)))
    out = adaptive_fuse(z, FeatureVolume(z.spec, np.zeros((4, 4, 4, 16))))
    assert (out.values == 0.0).all()


def test_fuse_zero_gate_blends_half():
    # zero mix kernel -> gate 0 -> sigmoid 0.5 -> 0.5*1 + 0.5*0
    spec = GridSpec((0.0, 0.0, 0.0), 1.0, (4, 4, 4))
    ones = FeatureVolume(spec, np.ones((4, 4, 4, 16)))
    zeros = FeatureVolume(spec, np.zeros((4, 4, 4, 16)))
    out = adaptive_fuse(ones, zeros, mix_matrix=np.zeros((16, 32)))
    np.testing.assert_array_equal(out.values, np.full((4, 4, 4, 16), 0.5))


@given(seed=st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_fuse_stays_in_elementwise_envelope(seed):
    rng = np.random.default_rng(seed)
    a = _volume(rng)
    b = FeatureVolume(a.spec, rng.normal(size=a.values.shape))
    out = adaptive_fuse(a, b).values
    assert (out >= np.minimum(a.values, b.values)).all()
    assert (out <= np.maximum(a.values, b.values)).all()


def test_fuse_rejects_shape_mismatch(rng):
    a = _volume(rng)
    b = FeatureVolume(a.spec, rng.normal(size=(4, 4, 4, 8)))
    with pytest.raises(ValueError, match="share"):
        adaptive_fuse(a, b)


# ── softmax and decoder head ─────────────────────────────────────────


def test_softmax_of_zeros_is_uniform():
    out = softmax(np.zeros(18))
    np.testing.assert_array_equal(out, np.full(18, 1.0 / 18.0))
    assert out[0] == pytest.approx(0.055556, abs=1e-6)


def test_softmax_shift_invariance(rng):
    logits = rng.normal(size=(5, 18))
    shifted = logits + rng.normal(size=(5, 1))
    np.testing.assert_allclose(softmax(logits), softmax(shifted), atol=1e-12)


def test_decode_zero_features_gives_constant_bias_distribution(rng):
    cfg = EncoderConfig(stride=2, channels=4)
    head = HeadConfig(12, rng.normal(size=(18, 12)), rng.normal(size=18))
    f = FeatureVolume(GridSpec((0.0, 0.0, 0.0), 1.0, (8, 8, 8)), np.zeros((8, 8, 8, 4)))
    out = decode_and_head(f, cfg, head).values
    expect = softmax(head.bias)
    np.testing.assert_array_equal(out, np.broadcast_to(expect, out.shape))


def test_decode_outputs_valid_distributions(rng):
    cfg = EncoderConfig(stride=2, channels=4)
    head = HeadConfig(12, rng.normal(size=(18, 12)), rng.normal(size=18))
    f = FeatureVolume(
        GridSpec((0.0, 0.0, 0.0), 1.0, (8, 8, 8)), rng.normal(size=(8, 8, 8, 4)) * 5
    )
    out = decode_and_head(f, cfg, head).values
    assert (out >= 0.0).all()
    np.testing.assert_allclose(out.sum(axis=3), 1.0, atol=1e-9)


def test_decode_rejects_channel_mismatch(rng):
    cfg = EncoderConfig(stride=2, channels=4)
    head = HeadConfig(18, rng.normal(size=(18, 18)), np.zeros(18))
    f = FeatureVolume(GridSpec((0.0, 0.0, 0.0), 1.0, (8, 8, 8)), np.zeros((8, 8, 8, 4)))
    with pytest.raises(ValueError, match="channels"):
        decode_and_head(f, cfg, head)


def test_decode_of_fused_degenerate_pair_equals_single_branch(rng):
    cfg = EncoderConfig(stride=2, channels=4)
    head = HeadConfig(12, rng.normal(size=(18, 12)), rng.normal(size=18))
    v = FeatureVolume(
        GridSpec((0.0, 0.0, 0.0), 1.0, (8, 8, 8)), rng.normal(size=(8, 8, 8, 4))
    )
    fused = adaptive_fuse(v, FeatureVolume(v.spec, v.values.copy()))
    a = decode_and_head(fused, cfg, head)
    b = decode_and_head(v, cfg, head)
    np.testing.assert_array_equal(a.values, b.values)


# ── full forward ─────────────────────────────────────────────────────


def test_encode_features_rejects_unknown_modality(small_frame):
    with pytest.raises(ValueError, match="modality"):
        encode_features(small_frame, "radar", EncoderConfig(), SMALL_SPEC)


def test_camera_modality_requires_depth():
    frame = _Frame(point_cloud=_empty_cloud())
    with pytest.raises(ValueError, match="depth"):
        encode_features(frame, "camera", EncoderConfig(), SMALL_SPEC)


def test_baseline_forward_standard_dims(small_frame):
    cfg = EncoderConfig(stride=4)
    out = baseline_forward(small_frame, "lidar", cfg, load_head("lidar"))
    assert out.values.shape == (10, 128, 128, 18)
    np.testing.assert_allclose(out.values.sum(axis=3), 1.0, atol=1e-9)


def test_baseline_forward_deterministic(small_frame):
    cfg = EncoderConfig(stride=4)
    head = load_head("multimodal")
    a = baseline_forward(small_frame, "multimodal", cfg, head, SMALL_SPEC)
    b = baseline_forward(small_frame, "multimodal", cfg, head, SMALL_SPEC)
    np.testing.assert_array_equal(a.values, b.values)


# ── analytic cost model ──────────────────────────────────────────────


def test_decoder_flops_scale_exactly_8x():
    spec = GridSpec.standard()
    s2 = flop_count(EncoderConfig(stride=2), spec, "decode")
    s4 = flop_count(EncoderConfig(stride=4), spec, "decode")
    assert s2 == 8.0 * s4


def test_refine_flops_linear_in_queries():
    spec = GridSpec.standard()
    cfg = EncoderConfig(stride=4)
    base = flop_count(cfg, spec, "refine", eta=2, occupied_fraction=0.015)
    assert flop_count(cfg, spec, "refine", eta=4, occupied_fraction=0.015) == 8.0 * base
    assert flop_count(cfg, spec, "refine", eta=2, occupied_fraction=0.030) == 2.0 * base


def test_cascade_cheaper_than_dense_fine_decode():
    # refining occupied coarse voxels at stride 4 must undercut running
    # the dense decoder at stride 2 (the point of the cascade)
    spec = GridSpec.standard()
    cascade = flop_count(EncoderConfig(stride=4), spec, "refine", eta=4)
    dense = flop_count(EncoderConfig(stride=2), spec, "decode")
    assert cascade < 0.5 * dense


def test_flop_and_memory_reject_unknown_stage():
    with pytest.raises(ValueError, match="stage"):
        flop_count(EncoderConfig(), GridSpec.standard(), "train")
    with pytest.raises(ValueError, match="stage"):
        memory_estimate(EncoderConfig(), GridSpec.standard(), "train")


def test_memory_estimates_scale_with_resolution():
    spec = GridSpec.standard()
    assert memory_estimate(
        EncoderConfig(stride=2), spec, "decode"
    ) == 8.0 * memory_estimate(EncoderConfig(stride=4), spec, "decode")
    assert memory_estimate(
        EncoderConfig(), spec, "refine", eta=4
    ) == 8.0 * memory_estimate(EncoderConfig(), spec, "refine", eta=2)
