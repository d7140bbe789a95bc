"""Coarse-to-fine occupancy refinement.

Occupied coarse voxels are split into eta^3 fine queries; each query
samples 2D per-view semantic features (through the cameras) and 3D
geometric features (from the pre-decoder voxel volume), a fixed fused
linear head turns the samples into an 18-way distribution, and the
results are scattered into a fine volume whose unqueried voxels stay
empty.  Work scales with the number of occupied voxels, not with the
fine grid size.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .geometry import CameraModel, project_to_camera
from .grid import DenseLabelGrid, EMPTY_ID, GridSpec, N_LABELS
from .network import (
    EncoderConfig,
    HeadConfig,
    baseline_forward,
    camera_raw_features,
    decode_and_head,
    encode_features,
    softmax,
)
from .sampling import (
    FeatureVolume,
    ImageFeatureMap,
    argmax_labels,
    trilinear_sample_3d,
)


@dataclass(frozen=True)
class QuerySet:
    """Fine-resolution queries derived from occupied coarse voxels.

    ``queries`` are corner-anchored continuous coarse-grid coordinates
    (z0+k/eta, y0+j/eta, x0+i/eta); ``world`` holds the matching fine
    voxel centers in world coordinates; ``fine_indices`` is the injective
    map onto fine voxel indices (eta times finer than the coarse grid).
    """

    eta: int
    stride: int | None
    spec_coarse: GridSpec
    queries: np.ndarray  # (N,3) float64, coarse-grid units
    parent: np.ndarray  # (N,3) int64 coarse voxel index
    world: np.ndarray  # (N,3) float64 xyz
    fine_indices: np.ndarray  # (N,3) int64

    def __len__(self) -> int:
        return self.queries.shape[0]


def extract_occupied(coarse_probs: FeatureVolume) -> np.ndarray:
    """(N,3) indices of voxels whose argmax label is non-empty, in
    (z,y,x) lexicographic order."""
    labels = argmax_labels(coarse_probs)
    return np.argwhere(labels.labels != EMPTY_ID).astype(np.int64)


def split_voxels(
    v_o: np.ndarray, eta: int, spec_coarse: GridSpec, stride: int | None = None
) -> QuerySet:
    """Each occupied voxel becomes eta^3 children at offsets k/eta.

    Children enumerate z-major (z offset outermost, x innermost), so
    query order is deterministic given the voxel order.
    """
    if eta < 1:
        raise ValueError("eta must be >= 1")
    v_o = np.asarray(v_o, dtype=np.int64).reshape(-1, 3)
    n = v_o.shape[0]
    offs = np.arange(eta, dtype=np.float64) / eta
    oz, oy, ox = np.meshgrid(offs, offs, offs, indexing="ij")
    block = np.stack([oz.ravel(), oy.ravel(), ox.ravel()], axis=1)  # (eta^3,3)
    queries = (v_o[:, None, :] + block[None, :, :]).reshape(-1, 3)
    parent = np.repeat(v_o, eta**3, axis=0)
    fine_indices = np.rint(queries * eta).astype(np.int64)
    fine_spec = spec_coarse.refined(eta)
    vs = fine_spec.voxel_size
    centers = (fine_indices.astype(np.float64) + 0.5) * vs
    world = centers[:, ::-1] + np.asarray(fine_spec.origin)
    assert world.shape == (n * eta**3, 3)
    return QuerySet(
        eta=eta,
        stride=stride,
        spec_coarse=spec_coarse,
        queries=queries,
        parent=parent,
        world=world,
        fine_indices=fine_indices,
    )


def sample_semantic(
    queries: QuerySet, image_feats: list[ImageFeatureMap], cams: list[CameraModel]
) -> np.ndarray:
    """Mean of bilinear per-view samples over the views that see each
    query's world point; zero vector where no view is valid."""
    n = len(queries)
    if not image_feats:
        raise ValueError("no image feature maps")
    c = image_feats[0].values.shape[2]
    sums = np.zeros((n, c))
    counts = np.zeros(n)
    for feat, cam in zip(image_feats, cams):
        uv, _, valid = project_to_camera(cam, queries.world)
        if not valid.any():
            continue
        sums[valid] += feat.sample_pixels(uv[valid])
        counts[valid] += 1.0
    out = np.zeros((n, c))
    seen = counts > 0
    out[seen] = sums[seen] / counts[seen, None]
    return out


def sample_geometric(queries: QuerySet, f_fused: FeatureVolume) -> np.ndarray:
    """Trilinear samples of the fused volume at the query coordinates.

    Query coordinates address the volume directly in sample space
    (stored values at integer coordinates), so eta=1 queries return the
    stored coarse features exactly.
    """
    if f_fused.spec.dims != queries.spec_coarse.dims:
        raise ValueError("fused volume dims do not match query coarse grid")
    return trilinear_sample_3d(f_fused.values, queries.queries)


@dataclass(frozen=True)
class FineFusionConfig:
    """Three fixed linear maps: semantic branch, geometric branch, output."""

    sem_weights: np.ndarray  # (C_h, C_s)
    sem_bias: np.ndarray  # (C_h,)
    geo_weights: np.ndarray  # (C_h, C_g)
    geo_bias: np.ndarray  # (C_h,)
    out_weights: np.ndarray  # (18, C_h)
    out_bias: np.ndarray  # (18,)
    provenance: str = "<inline>"

    def __post_init__(self):
        for name in (
            "sem_weights",
            "sem_bias",
            "geo_weights",
            "geo_bias",
            "out_weights",
            "out_bias",
        ):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if not np.isfinite(arr).all():
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, arr)
        ch = self.sem_weights.shape[0]
        if (
            self.geo_weights.shape[0] != ch
            or self.out_weights.shape != (N_LABELS, ch)
            or self.sem_bias.shape != (ch,)
            or self.geo_bias.shape != (ch,)
            or self.out_bias.shape != (N_LABELS,)
        ):
            raise ValueError("fine fusion map dimensions are inconsistent")

    @property
    def hidden(self) -> int:
        return self.sem_weights.shape[0]

    @property
    def sem_channels(self) -> int:
        return self.sem_weights.shape[1]

    @property
    def geo_channels(self) -> int:
        return self.geo_weights.shape[1]

    def to_json_obj(self) -> dict:
        return {
            "c_s": self.sem_channels,
            "c_g": self.geo_channels,
            "c_h": self.hidden,
            "sem": {"weights": self.sem_weights.tolist(), "bias": self.sem_bias.tolist()},
            "geo": {"weights": self.geo_weights.tolist(), "bias": self.geo_bias.tolist()},
            "out": {"weights": self.out_weights.tolist(), "bias": self.out_bias.tolist()},
        }

    @classmethod
    def from_json_obj(cls, obj: dict, provenance: str = "<inline>") -> "FineFusionConfig":
        cfg = cls(
            sem_weights=obj["sem"]["weights"],
            sem_bias=obj["sem"]["bias"],
            geo_weights=obj["geo"]["weights"],
            geo_bias=obj["geo"]["bias"],
            out_weights=obj["out"]["weights"],
            out_bias=obj["out"]["bias"],
            provenance=provenance,
        )
        declared = (obj["c_s"], obj["c_g"], obj["c_h"])
        actual = (cfg.sem_channels, cfg.geo_channels, cfg.hidden)
        if declared != actual:
            raise ValueError(f"declared dims {declared} != actual {actual}")
        return cfg


def load_fine_fusion(modality: str) -> FineFusionConfig:
    """Shipped fitted fine-fusion maps for one modality."""
    path = resources.files("occkit").joinpath(f"configs/conet_{modality}.json")
    return FineFusionConfig.from_json_obj(json.loads(path.read_text()), str(path))


def fuse_fine(fs: np.ndarray, fg: np.ndarray, cfg: FineFusionConfig) -> np.ndarray:
    """Per-query 18-way probabilities: softmax(out(sem(FS) + geo(FG)))."""
    fs = np.asarray(fs, dtype=np.float64)
    fg = np.asarray(fg, dtype=np.float64)
    if fs.shape[1] != cfg.sem_channels or fg.shape[1] != cfg.geo_channels:
        raise ValueError(
            f"feature dims ({fs.shape[1]},{fg.shape[1]}) do not match config "
            f"({cfg.sem_channels},{cfg.geo_channels})"
        )
    hidden = (
        fs @ cfg.sem_weights.T + cfg.sem_bias + fg @ cfg.geo_weights.T + cfg.geo_bias
    )
    logits = hidden @ cfg.out_weights.T + cfg.out_bias
    return softmax(logits)


def scatter_volume(
    o_fg: np.ndarray, queries: QuerySet, eta: int, spec_coarse: GridSpec
) -> tuple[DenseLabelGrid, FeatureVolume]:
    """Fine volume: query-addressed voxels get their distribution, the
    rest are one-hot empty.  The label grid is the argmax of the volume."""
    if eta != queries.eta:
        raise ValueError("eta does not match the query set")
    if spec_coarse != queries.spec_coarse:
        raise ValueError("coarse spec does not match the query set")
    o_fg = np.asarray(o_fg)
    if o_fg.shape != (len(queries), N_LABELS):
        raise ValueError("o_fg must be (n_queries, 18)")
    fine_spec = spec_coarse.refined(eta)
    df, hf, wf = fine_spec.dims
    fi = queries.fine_indices
    flat = (fi[:, 0] * hf + fi[:, 1]) * wf + fi[:, 2]
    if np.unique(flat).shape[0] != flat.shape[0]:
        raise ValueError("duplicate queries address one fine voxel")

    probs = np.zeros((df, hf, wf, N_LABELS), dtype=np.float32)
    probs[..., EMPTY_ID] = 1.0
    probs[fi[:, 0], fi[:, 1], fi[:, 2]] = np.asarray(o_fg, dtype=np.float32)
    labels = np.full(fine_spec.dims, EMPTY_ID, dtype=np.uint8)
    labels[fi[:, 0], fi[:, 1], fi[:, 2]] = np.argmax(
        probs[fi[:, 0], fi[:, 1], fi[:, 2]], axis=1
    ).astype(np.uint8)
    return DenseLabelGrid(fine_spec, labels), FeatureVolume(fine_spec, probs)


def image_feature_maps(frame) -> list[ImageFeatureMap]:
    """Per-view raw feature maps used by the semantic sampling branch."""
    return [
        ImageFeatureMap(camera_raw_features(sem, dep))
        for sem, dep in zip(frame.semantic_images, frame.depth_images)
    ]


def _query_slice(queries: QuerySet, lo: int, hi: int) -> QuerySet:
    return QuerySet(
        eta=queries.eta,
        stride=queries.stride,
        spec_coarse=queries.spec_coarse,
        queries=queries.queries[lo:hi],
        parent=queries.parent[lo:hi],
        world=queries.world[lo:hi],
        fine_indices=queries.fine_indices[lo:hi],
    )


_REFINE_CHUNK = 1 << 19  # queries per block; results are chunk-invariant


def refine(
    frame,
    modality: str,
    cfg: EncoderConfig,
    head: HeadConfig,
    fine_cfg: FineFusionConfig,
    eta: int = 4,
    spec: GridSpec | None = None,
) -> tuple[DenseLabelGrid, FeatureVolume]:
    """Full cascade: coarse forward, split occupied voxels, sample, fuse,
    scatter.  LiDAR-only runs use a zero semantic branch (queries are
    refined from the voxel features alone).

    Queries run through sampling and fusion in fixed-size blocks purely
    to bound peak memory; every per-query result is independent of the
    blocking.
    """
    if spec is None:
        spec = GridSpec.standard()
    features = encode_features(frame, modality, cfg, spec)
    coarse_probs = decode_and_head(features, cfg, head)
    v_o = extract_occupied(coarse_probs)
    del coarse_probs
    queries = split_voxels(v_o, eta, features.spec, cfg.stride)
    n = len(queries)
    o_fg = np.empty((n, N_LABELS), dtype=np.float32)
    image_feats = None
    if modality != "lidar":
        image_feats = image_feature_maps(frame)
    for lo in range(0, n, _REFINE_CHUNK):
        hi = min(lo + _REFINE_CHUNK, n)
        block = _query_slice(queries, lo, hi)
        if modality == "lidar":
            fs = np.zeros((len(block), fine_cfg.sem_channels))
        else:
            fs = sample_semantic(block, image_feats, frame.cameras)
        fg = sample_geometric(block, features)
        o_fg[lo:hi] = fuse_fine(fs, fg, fine_cfg).astype(np.float32)
    return scatter_volume(o_fg, queries, eta, features.spec)


def coarse_forward(
    frame,
    modality: str,
    cfg: EncoderConfig,
    head: HeadConfig,
    spec: GridSpec | None = None,
) -> FeatureVolume:
    """Convenience alias for the coarse baseline distribution."""
    return baseline_forward(frame, modality, cfg, head, spec)
