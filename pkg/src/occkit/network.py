"""Fixed-weight voxel networks: encoders, fusion, decoder, head.

These are forward-only stand-ins for trained models.  Every weight is
either a deterministic pseudo-random projection (derived from splitmix64
with a fixed salt, so all platforms agree bit-for-bit) or a shipped
fitted coefficient file (the classifier head).  All math runs in float64
with a fixed operation order; outputs are reproducible byte-for-byte.

Architecture per modality:
  lidar:  per-voxel raw stats -> stride-S mean pool -> 19->C map -> box smooth
  camera: per-pixel raw feats -> unproject -> per-voxel mean -> 18->C map -> box smooth
  fused:  sigmoid-gated blend of the two C-channel volumes
then a 3-scale mean-pool decoder, channel concat, linear head, softmax.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .geometry import CameraModel
from .grid import GridSpec, N_LABELS
from .rng import SplitMix64
from .sampling import (
    FeatureVolume,
    box_filter_3x3x3,
    pool_blocks_mean,
    upsample_trilinear,
)

LIDAR_RAW_CHANNELS = 19  # log1p count, mean height offset, 17-bin histogram
CAMERA_RAW_CHANNELS = 18  # 17-way one-hot, normalized inverse depth

_SALT_LIDAR_PROJ = 0x11DA
_SALT_CAMERA_PROJ = 0xCA3E
_SALT_FUSE_MIX = 0xF05E


def fixed_matrix(salt: int, rows: int, cols: int) -> np.ndarray:
    """Deterministic projection matrix, entries uniform in ±sqrt(3/cols).

    The scale gives unit fan-in variance, keeping activations comparable
    across layers; the stream depends only on (salt, rows, cols).
    """
    rng = SplitMix64(salt)
    scale = np.sqrt(3.0 / cols)
    out = np.empty((rows, cols))
    for i in range(rows):
        for j in range(cols):
            out[i, j] = (2.0 * rng.uniform() - 1.0) * scale
    return out


@dataclass(frozen=True)
class EncoderConfig:
    """Shared encoder/decoder geometry: stride and channel width."""

    stride: int = 4
    channels: int = 16
    scales: int = 3

    def __post_init__(self):
        if self.stride not in (2, 4):
            raise ValueError("stride must be 2 or 4")
        if self.channels < 1 or self.scales != 3:
            raise ValueError("channels >= 1 and exactly 3 scales required")

    def coarse_spec(self, spec: GridSpec) -> GridSpec:
        return spec.scaled(self.stride)

    @property
    def decoder_channels(self) -> int:
        return self.channels * self.scales


@dataclass(frozen=True)
class HeadConfig:
    """Linear classifier head: 18 logits from concatenated decoder features."""

    input_channels: int
    weights: np.ndarray  # (18, input_channels)
    bias: np.ndarray  # (18,)
    provenance: str = "<inline>"

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64).reshape(
            N_LABELS, self.input_channels
        )
        b = np.asarray(self.bias, dtype=np.float64).reshape(N_LABELS)
        if not (np.isfinite(w).all() and np.isfinite(b).all()):
            raise ValueError("head coefficients must be finite")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)

    def to_json_obj(self) -> dict:
        return {
            "channels": self.input_channels,
            "weights": self.weights.tolist(),
            "bias": self.bias.tolist(),
        }

    @classmethod
    def from_json_obj(cls, obj: dict, provenance: str = "<inline>") -> "HeadConfig":
        return cls(obj["channels"], obj["weights"], obj["bias"], provenance)


def load_head(modality: str) -> HeadConfig:
    """Shipped fitted head for 'camera', 'lidar', or 'multimodal'."""
    name = f"head_{modality}.json"
    path = resources.files("occkit").joinpath(f"configs/{name}")
    return HeadConfig.from_json_obj(json.loads(path.read_text()), str(path))


def _fine_indices(spec: GridSpec, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(in-bounds mask, (N,3) integer (z,y,x) voxel indices)."""
    d, h, w = spec.dims
    g = (points - np.asarray(spec.origin)) / spec.voxel_size
    idx = np.floor(g).astype(np.int64)
    ok = (
        (idx[:, 0] >= 0)
        & (idx[:, 0] < w)
        & (idx[:, 1] >= 0)
        & (idx[:, 1] < h)
        & (idx[:, 2] >= 0)
        & (idx[:, 2] < d)
    )
    return ok, idx[:, ::-1]  # to (z,y,x)


def lidar_encode(points, spec: GridSpec, cfg: EncoderConfig) -> FeatureVolume:
    """Point statistics pooled to the coarse grid; see module docstring.

    Raw per-fine-voxel channels: [log1p(count), mean z offset from the
    voxel center, 17-bin label histogram normalized to sum 1].  Pooling
    divides by the full block size S^3 (absent fine voxels contribute
    zeros), then the fixed 19->C map and a 3x3x3 box smoothing run at
    the coarse level.  Accumulation is order-invariant.
    """
    s = cfg.stride
    coarse = cfg.coarse_spec(spec)
    dc, hc, wc = coarse.dims
    raw_sums = np.zeros((dc * hc * wc, LIDAR_RAW_CHANNELS))

    if len(points) > 0:
        if (points.labels >= 17).any():
            raise ValueError("point labels must be semantic or noise (0..16)")
        ok, zyx = _fine_indices(spec, points.points)
        zyx = zyx[ok]
        if zyx.shape[0] > 0:
            labels = points.labels[ok].astype(np.int64)
            z_off = (
                points.points[ok][:, 2]
                - (spec.origin[2] + (zyx[:, 0] + 0.5) * spec.voxel_size)
            )
            d, h, w = spec.dims
            fine_flat = (zyx[:, 0] * h + zyx[:, 1]) * w + zyx[:, 2]
            # canonical per-voxel summation order: float addition is not
            # associative, and the output must not depend on point order
            order = np.lexsort((z_off, fine_flat))
            fine_flat = fine_flat[order]
            z_off = z_off[order]
            labels = labels[order]
            uniq, inv, counts = np.unique(
                fine_flat, return_inverse=True, return_counts=True
            )
            m = uniq.shape[0]
            raw = np.zeros((m, LIDAR_RAW_CHANNELS))
            raw[:, 0] = np.log1p(counts)
            raw[:, 1] = np.bincount(inv, weights=z_off, minlength=m) / counts
            hist = np.zeros((m, 17))
            np.add.at(hist, (inv, labels), 1.0)
            raw[:, 2:] = hist / counts[:, None]
            # occupied fine voxel -> its stride-S block
            fz, fy, fx = uniq // (h * w), (uniq // w) % h, uniq % w
            coarse_flat = ((fz // s) * hc + fy // s) * wc + fx // s
            for c in range(LIDAR_RAW_CHANNELS):
                raw_sums[:, c] += np.bincount(
                    coarse_flat, weights=raw[:, c], minlength=dc * hc * wc
                )

    pooled = (raw_sums / float(s**3)).reshape(dc, hc, wc, LIDAR_RAW_CHANNELS)
    proj = fixed_matrix(_SALT_LIDAR_PROJ, cfg.channels, LIDAR_RAW_CHANNELS)
    mapped = pooled @ proj.T
    return FeatureVolume(coarse, box_filter_3x3x3(mapped))


def camera_raw_features(semantic: np.ndarray, depth: np.ndarray) -> np.ndarray:
    """(H,W,18) per-pixel raw features: one-hot label and inverse depth.

    Pixels with depth 0 (no surface) are all-zero and must be excluded
    from accumulation by the caller.
    """
    h, w = semantic.shape
    out = np.zeros((h, w, CAMERA_RAW_CHANNELS))
    valid = depth > 0
    labels = semantic[valid].astype(np.int64)
    if labels.size and labels.max() >= 17:
        raise ValueError("rendered labels at hit pixels must be 0..16")
    jj, ii = np.nonzero(valid)
    out[jj, ii, labels] = 1.0
    out[jj, ii, 17] = 1.0 / (1.0 + depth[valid])
    return out


def camera_encode(
    semantic_images: list,
    depth_images: list,
    cams: list[CameraModel],
    spec: GridSpec,
    cfg: EncoderConfig,
) -> FeatureVolume:
    """Depth-lifted image features pooled to the coarse grid.

    Every pixel with depth>0 is unprojected through its camera into the
    frame's reference system and its raw feature vector is averaged into
    the stride-S voxel of the landing point (fine index // S).
    """
    s = cfg.stride
    coarse = cfg.coarse_spec(spec)
    dc, hc, wc = coarse.dims
    n_cells = dc * hc * wc
    sums = np.zeros((n_cells, CAMERA_RAW_CHANNELS))
    counts = np.zeros(n_cells)

    for sem, dep, cam in zip(semantic_images, depth_images, cams):
        valid = dep > 0
        if not valid.any():
            continue
        jj, ii = np.nonzero(valid)
        d_ = dep[valid]
        u = ii + 0.5
        v = jj + 0.5
        p_cam = np.stack(
            [(u - cam.cx) / cam.fx * d_, (v - cam.cy) / cam.fy * d_, d_], axis=1
        )
        p_ref = cam.cam_from_world.inverse().apply(p_cam)
        ok, zyx = _fine_indices(spec, p_ref)
        if not ok.any():
            continue
        zyx = zyx[ok]
        raw = camera_raw_features(sem, dep)[jj, ii][ok]
        coarse_flat = ((zyx[:, 0] // s) * hc + zyx[:, 1] // s) * wc + zyx[:, 2] // s
        for c in range(CAMERA_RAW_CHANNELS):
            sums[:, c] += np.bincount(coarse_flat, weights=raw[:, c], minlength=n_cells)
        counts += np.bincount(coarse_flat, minlength=n_cells)

    mean = np.zeros_like(sums)
    nz = counts > 0
    mean[nz] = sums[nz] / counts[nz, None]
    mean = mean.reshape(dc, hc, wc, CAMERA_RAW_CHANNELS)
    proj = fixed_matrix(_SALT_CAMERA_PROJ, cfg.channels, CAMERA_RAW_CHANNELS)
    mapped = mean @ proj.T
    return FeatureVolume(coarse, box_filter_3x3x3(mapped))


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def adaptive_fuse(
    fl: FeatureVolume, fc: FeatureVolume, mix_matrix: np.ndarray | None = None
) -> FeatureVolume:
    """Gated blend of the two modality volumes.

    Gate W = box(mix([box(FL), box(FC)])) with a fixed channel-halving
    matrix ``mix`` (2C->C, override for tests); output is the convex
    combination sigmoid(W)*FL + (1-sigmoid(W))*FC, so it lies within
    the elementwise [min, max] envelope of the inputs.
    """
    if fl.spec != fc.spec or fl.values.shape != fc.values.shape:
        raise ValueError("fused volumes must share spec and shape")
    c = fl.values.shape[3]
    if mix_matrix is None:
        mix_matrix = fixed_matrix(_SALT_FUSE_MIX, c, 2 * c)
    mix_matrix = np.asarray(mix_matrix, dtype=np.float64).reshape(c, 2 * c)
    cat = np.concatenate(
        [box_filter_3x3x3(fl.values), box_filter_3x3x3(fc.values)], axis=3
    )
    gate = box_filter_3x3x3(cat @ mix_matrix.T)
    sig = _sigmoid(gate)
    blend = sig * fl.values + (1.0 - sig) * fc.values
    # rounding can push the blend one ulp outside the inputs' envelope
    # (and off V when FL == FC == V); the contract promises containment
    lo = np.minimum(fl.values, fc.values)
    hi = np.maximum(fl.values, fc.values)
    return FeatureVolume(fl.spec, np.clip(blend, lo, hi))


def softmax(logits: np.ndarray) -> np.ndarray:
    """Stable softmax over the last axis."""
    m = logits.max(axis=-1, keepdims=True)
    e = np.exp(logits - m)
    return e / e.sum(axis=-1, keepdims=True)


def decoder_features(f: FeatureVolume, cfg: EncoderConfig) -> np.ndarray:
    """3-scale mean-pool decoder: (D,H,W,3C) multi-scale channel stack.

    Scales 1 and 2 pool by 2 and 4 (partial blocks at the far edge
    average what they cover, so odd dims are fine) and are trilinearly
    upsampled back before concatenation.
    """
    f0 = f.values.astype(np.float64, copy=False)
    dims = f0.shape[:3]
    f1 = pool_blocks_mean(f0, 2)
    f2 = pool_blocks_mean(f1, 2)
    return np.concatenate(
        [f0, upsample_trilinear(f1, dims), upsample_trilinear(f2, dims)], axis=3
    )


def decode_and_head(
    f: FeatureVolume, cfg: EncoderConfig, head: HeadConfig
) -> FeatureVolume:
    """Decoder stack, linear head, softmax -> per-voxel distribution."""
    if head.input_channels != cfg.decoder_channels:
        raise ValueError(
            f"head expects {head.input_channels} channels, decoder emits "
            f"{cfg.decoder_channels}"
        )
    cat = decoder_features(f, cfg)
    logits = cat @ head.weights.T + head.bias
    return FeatureVolume(f.spec, softmax(logits))


MODALITIES = ("camera", "lidar", "multimodal")


def encode_features(frame, modality: str, cfg: EncoderConfig, spec: GridSpec) -> FeatureVolume:
    """The modality's pre-decoder feature volume (fused for multimodal)."""
    if modality not in MODALITIES:
        raise ValueError(f"unknown modality {modality!r}")
    if modality in ("camera", "multimodal"):
        if not frame.depth_images:
            raise ValueError("camera modality requires depth images")
        fc = camera_encode(
            frame.semantic_images, frame.depth_images, frame.cameras, spec, cfg
        )
        if modality == "camera":
            return fc
    fl = lidar_encode(frame.point_cloud, spec, cfg)
    if modality == "lidar":
        return fl
    return adaptive_fuse(fl, fc)


def baseline_forward(
    frame,
    modality: str,
    cfg: EncoderConfig,
    head: HeadConfig,
    spec: GridSpec | None = None,
) -> FeatureVolume:
    """Full coarse forward pass: encode -> decode -> 18-way probabilities."""
    if spec is None:
        spec = GridSpec.standard()
    return decode_and_head(encode_features(frame, modality, cfg, spec), cfg, head)


# ---------------------------------------------------------------------------
# Analytic compute/memory model
# ---------------------------------------------------------------------------

FINE_FUSION_HIDDEN = 34  # C_h of the fine fusion (18 + 16 stacked)
_SEM_CHANNELS = CAMERA_RAW_CHANNELS
_N_VIEWS = 6
_PROJECT_COST = 20.0  # multiply-adds per point-into-camera projection


def flop_count(
    cfg: EncoderConfig,
    spec: GridSpec,
    stage: str,
    eta: int = 4,
    occupied_fraction: float = 0.015,
) -> float:
    """Closed-form multiply-add counts for one frame.

    Counts use ideal (rational) voxel counts n_fine and n_fine/S^3 so
    scaling laws are exact: halving S multiplies every decoder term by
    exactly 8.  ``refine`` covers only the cascade stage (queries); its
    cost is linear in occupied_fraction * n_coarse * eta^3.
    """
    d, h, w = spec.dims
    n_fine = float(d * h * w)
    s = cfg.stride
    c = cfg.channels
    n_coarse = n_fine / s**3
    if stage == "encode":
        lidar = (
            n_fine * LIDAR_RAW_CHANNELS  # fine raw accumulation + pooling
            + n_coarse * LIDAR_RAW_CHANNELS * c  # 1x1x1 projection
            + n_coarse * 27.0 * c  # box smoothing
        )
        camera = (
            n_fine * CAMERA_RAW_CHANNELS
            + n_coarse * CAMERA_RAW_CHANNELS * c
            + n_coarse * 27.0 * c
        )
        fuse = (
            2.0 * n_coarse * 27.0 * c  # per-branch box filters
            + n_coarse * 2.0 * c * c  # channel mix
            + n_coarse * 27.0 * c  # gate box filter
            + n_coarse * 3.0 * c  # sigmoid blend
        )
        return lidar + camera + fuse
    if stage == "decode":
        pool = n_coarse * c + n_coarse * c / 8.0
        upsample = 2.0 * n_coarse * 8.0 * c
        head = n_coarse * (cfg.decoder_channels * float(N_LABELS))
        softmax_cost = n_coarse * 2.0 * N_LABELS
        return pool + upsample + head + softmax_cost
    if stage == "refine":
        n_queries = occupied_fraction * n_coarse * float(eta**3)
        per_query = (
            _N_VIEWS * _PROJECT_COST
            + _N_VIEWS * 4.0 * _SEM_CHANNELS  # bilinear semantic samples
            + 8.0 * c  # trilinear geometric sample
            + _SEM_CHANNELS * FINE_FUSION_HIDDEN
            + c * FINE_FUSION_HIDDEN
            + FINE_FUSION_HIDDEN * N_LABELS
            + 2.0 * N_LABELS  # softmax
            + 1.0  # scatter
        )
        return n_queries * per_query
    raise ValueError(f"unknown stage {stage!r}")


def memory_estimate(
    cfg: EncoderConfig,
    spec: GridSpec,
    stage: str,
    eta: int = 4,
    occupied_fraction: float = 0.015,
) -> float:
    """Peak transient float64 bytes of the stage's dominant tensors."""
    d, h, w = spec.dims
    n_fine = float(d * h * w)
    n_coarse = n_fine / cfg.stride**3
    c = cfg.channels
    if stage == "encode":
        return n_coarse * max(LIDAR_RAW_CHANNELS, 2 * c) * 8.0
    if stage == "decode":
        return n_coarse * (cfg.decoder_channels + N_LABELS) * 8.0
    if stage == "refine":
        n_queries = occupied_fraction * n_coarse * float(eta**3)
        width = _SEM_CHANNELS + c + FINE_FUSION_HIDDEN + N_LABELS
        return n_queries * width * 8.0
    raise ValueError(f"unknown stage {stage!r}")
