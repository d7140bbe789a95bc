"""Interpolation, resampling, pooling, and box filtering.

Two continuous coordinate systems are used:

* grid coordinates, from ``world_to_voxel``: voxel k spans [k, k+1).
* sample coordinates, used by every interpolator here: the stored value
  of voxel/pixel k sits exactly at coordinate k (node exactness), so
  ``sample = grid - 0.5``.

All interpolation zero-pads outside the stored array.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .grid import DenseLabelGrid, GridSpec, N_LABELS, world_to_voxel


@dataclass(frozen=True)
class FeatureVolume:
    """A (D,H,W,C) array of per-voxel channel values on a metric grid."""

    spec: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim != 4 or v.shape[:3] != self.spec.dims:
            raise ValueError(
                f"values shape {v.shape} does not match dims {self.spec.dims}"
            )
        if not np.isfinite(v).all():
            raise ValueError("feature values must be finite")
        object.__setattr__(self, "values", v)

    @property
    def channels(self) -> int:
        return self.values.shape[3]

    def sample_world(self, points) -> np.ndarray:
        """Trilinear samples at world (x,y,z) points, zero outside."""
        coords = world_to_voxel(self.spec, points) - 0.5
        return trilinear_sample_3d(self.values, coords)


@dataclass(frozen=True)
class ImageFeatureMap:
    """A (H,W,C) per-pixel channel array for one camera view."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim != 3:
            raise ValueError("image feature map must be (H,W,C)")
        if not np.isfinite(v).all():
            raise ValueError("feature values must be finite")
        object.__setattr__(self, "values", v)

    def sample_pixels(self, uv) -> np.ndarray:
        """Bilinear samples at continuous pixel-area (u,v) coordinates.

        Projection coordinates place the center of pixel (i,j) at
        (i+0.5, j+0.5); the 0.5 shift into sample space happens here.
        """
        uv = np.asarray(uv, dtype=np.float64).reshape(-1, 2) - 0.5
        return bilinear_sample_2d(self.values, uv)


def trilinear_sample_3d(values: np.ndarray, coords) -> np.ndarray:
    """Sample a (D,H,W,C) volume at (N,3) sample-space (z,y,x) coords."""
    coords = np.asarray(coords, dtype=np.float64).reshape(-1, 3)
    return _kernels.trilinear_gather(values, coords)


def bilinear_sample_2d(values: np.ndarray, uv) -> np.ndarray:
    """Sample a (H,W,C) image at (N,2) sample-space (u,v) coords.

    u indexes columns (width axis), v rows; node k at coordinate k.
    """
    uv = np.asarray(uv, dtype=np.float64).reshape(-1, 2)
    return _kernels.bilinear_gather(values, uv)


def resample_axis_coords(src_dim: int, dst_dim: int) -> np.ndarray:
    """Sample-space source coordinates for align-to-centers resampling.

    Target voxel t (center at grid coordinate t+0.5) maps to source grid
    coordinate (t+0.5)·src/dst, i.e. sample coordinate (t+0.5)·src/dst−0.5.
    """
    scale = src_dim / dst_dim
    return (np.arange(dst_dim, dtype=np.float64) + 0.5) * scale - 0.5


def resample_volume(
    values: np.ndarray, out_dims: tuple[int, int, int], chunk_z: int = 8
) -> np.ndarray:
    """Per-channel trilinear align-to-centers resample to ``out_dims``.

    Processes the target in z slabs to bound peak memory at full
    resolution (a standard-dims 18-channel target is ~750 MB already).
    """
    d_out, h_out, w_out = out_dims
    zs = resample_axis_coords(values.shape[0], d_out)
    ys = resample_axis_coords(values.shape[1], h_out)
    xs = resample_axis_coords(values.shape[2], w_out)
    out = np.empty((d_out, h_out, w_out, values.shape[3]), dtype=values.dtype)
    grid_y, grid_x = np.meshgrid(ys, xs, indexing="ij")
    for z0 in range(0, d_out, chunk_z):
        z1 = min(z0 + chunk_z, d_out)
        nz = z1 - z0
        coords = np.empty((nz, h_out, w_out, 3))
        coords[..., 0] = zs[z0:z1, None, None]
        coords[..., 1] = grid_y[None]
        coords[..., 2] = grid_x[None]
        samp = _kernels.trilinear_gather(values, coords.reshape(-1, 3))
        out[z0:z1] = samp.reshape(nz, h_out, w_out, -1)
    return out


def resample_probabilities(
    probs: FeatureVolume, out_dims: tuple[int, int, int]
) -> FeatureVolume:
    """Resample a per-voxel probability volume and renormalize.

    Requires 18 nonnegative channels summing to 1 per voxel (1e-6).
    """
    v = probs.values
    if v.shape[3] != N_LABELS:
        raise ValueError(f"expected {N_LABELS} channels, got {v.shape[3]}")
    if v.min() < 0:
        raise ValueError("negative probability")
    sums = v.sum(axis=3)
    if np.abs(sums - 1.0).max() > 1e-6:
        raise ValueError("per-voxel probabilities must sum to 1")
    out = resample_volume(v, out_dims)
    out_sums = out.sum(axis=3)
    if out_sums.min() <= 0:
        raise ValueError("zero-mass voxel after resampling")
    out = out / out_sums[..., None]
    spec = _scaled_spec(probs.spec, out_dims)
    return FeatureVolume(spec, out)


def _scaled_spec(spec: GridSpec, out_dims: tuple[int, int, int]) -> GridSpec:
    """Spec covering the same extent at new dims (uniform scale only)."""
    ratios = [s / o for s, o in zip(spec.dims, out_dims)]
    if max(ratios) - min(ratios) > 1e-12:
        raise ValueError(f"non-uniform resample {spec.dims} -> {out_dims}")
    return GridSpec(spec.origin, spec.voxel_size * ratios[0], tuple(out_dims))


def argmax_labels(probs: FeatureVolume) -> DenseLabelGrid:
    """Per-voxel most probable label; ties go to the lowest id."""
    v = probs.values
    if v.shape[3] != N_LABELS:
        raise ValueError(f"expected {N_LABELS} channels, got {v.shape[3]}")
    labels = np.argmax(v, axis=3).astype(np.uint8)
    return DenseLabelGrid(probs.spec, labels)


def resample_argmax_labels(
    probs: FeatureVolume, out_dims: tuple[int, int, int]
) -> DenseLabelGrid:
    """Argmax labels of the resampled distribution, never materializing
    the full-resolution float volume.

    Skipping the per-voxel renormalization of resample_probabilities is
    exact here: argmax is invariant under positive scaling, and the
    align-to-centers sample points always keep an in-bounds corner
    weight, so no voxel collapses to zero mass.  Equal dims reduce to a
    node-exact resample, i.e. plain argmax.
    """
    v = probs.values
    if v.shape[3] != N_LABELS:
        raise ValueError(f"expected {N_LABELS} channels, got {v.shape[3]}")
    if v.min() < 0:
        raise ValueError("negative probability")
    if np.abs(v.sum(axis=3) - 1.0).max() > 1e-6:
        raise ValueError("per-voxel probabilities must sum to 1")
    spec = _scaled_spec(probs.spec, out_dims)
    if tuple(out_dims) == probs.spec.dims:
        return DenseLabelGrid(spec, np.argmax(v, axis=3).astype(np.uint8))
    src = np.asarray(v, dtype=np.float64)
    d_out, h_out, w_out = out_dims
    zs = resample_axis_coords(src.shape[0], d_out)
    ys = resample_axis_coords(src.shape[1], h_out)
    xs = resample_axis_coords(src.shape[2], w_out)
    grid_y, grid_x = np.meshgrid(ys, xs, indexing="ij")
    labels = np.empty(out_dims, dtype=np.uint8)
    chunk_z = max(1, (2 ** 20) // (h_out * w_out))
    for z0 in range(0, d_out, chunk_z):
        z1 = min(z0 + chunk_z, d_out)
        nz = z1 - z0
        coords = np.empty((nz, h_out, w_out, 3))
        coords[..., 0] = zs[z0:z1, None, None]
        coords[..., 1] = grid_y[None]
        coords[..., 2] = grid_x[None]
        samp = _kernels.trilinear_gather(src, coords.reshape(-1, 3))
        labels[z0:z1] = (
            np.argmax(samp, axis=1).astype(np.uint8).reshape(nz, h_out, w_out)
        )
    return DenseLabelGrid(spec, labels)


def box_filter_3x3x3(values: np.ndarray) -> np.ndarray:
    """Mean over the 3x3x3 neighborhood with zero padding (divisor 27)."""
    d, h, w = values.shape[:3]
    padded = np.zeros((d + 2, h + 2, w + 2) + values.shape[3:], dtype=np.float64)
    padded[1:-1, 1:-1, 1:-1] = values
    out = np.zeros_like(padded[1:-1, 1:-1, 1:-1])
    for dz in range(3):
        for dy in range(3):
            for dx in range(3):
                out += padded[dz : dz + d, dy : dy + h, dx : dx + w]
    out /= 27.0
    return out.astype(values.dtype, copy=False)


def pool_blocks_mean(values: np.ndarray, factor: int) -> np.ndarray:
    """Block-mean pooling to ceil(dim/factor) dims.

    Blocks at the far edge may be partial; each block averages only the
    elements it actually covers.
    """
    if factor < 1:
        raise ValueError("factor must be >= 1")
    if factor == 1:
        return values.astype(np.float64, copy=True)
    out = values.astype(np.float64, copy=False)
    for axis in range(3):
        n = out.shape[axis]
        idx = np.arange(0, n, factor)
        sums = np.add.reduceat(out, idx, axis=axis)
        counts = np.minimum(idx + factor, n) - idx
        shape = [1, 1, 1, 1]
        shape[axis] = len(idx)
        out = sums / counts.reshape(shape[: out.ndim])
    return out


def upsample_trilinear(values: np.ndarray, out_dims: tuple[int, int, int]) -> np.ndarray:
    """Align-to-centers trilinear resize (no renormalization)."""
    return resample_volume(values, out_dims)
