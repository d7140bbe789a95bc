"""Voxel grid, label-set, and label-grid types.

Coordinate conventions (used everywhere in this package):

* World points are (x, y, z) in meters.  Grid arrays are indexed (z, y, x),
  i.e. dims = (D, H, W) with D along Z.
* ``world_to_voxel`` maps a world point to *grid coordinates*
  g = (p - origin) / voxel_size (reordered to (z, y, x)).  Voxel k spans
  [k, k+1) in grid coordinates and its center sits at k + 0.5.
* Interpolation uses *node coordinates*: the stored value of voxel k lives
  at node coordinate k (the voxel center).  node = grid - 0.5.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class GridSpec:
    """Metric placement of a dense voxel grid.

    origin is the minimum corner in world coordinates (x, y, z);
    dims are voxel counts ordered (D, H, W) = (Z, Y, X).
    """

    origin: tuple[float, float, float]
    voxel_size: float
    dims: tuple[int, int, int]

    def __post_init__(self):
        if not (self.voxel_size > 0):
            raise ValueError("voxel_size must be positive")
        if any(d < 1 for d in self.dims):
            raise ValueError("all dims must be >= 1")
        object.__setattr__(self, "origin", tuple(float(v) for v in self.origin))
        object.__setattr__(self, "voxel_size", float(self.voxel_size))
        object.__setattr__(self, "dims", tuple(int(v) for v in self.dims))

    @classmethod
    def from_ranges(
        cls,
        x_range: tuple[float, float],
        y_range: tuple[float, float],
        z_range: tuple[float, float],
        voxel_size: float,
    ) -> "GridSpec":
        """Build a spec from metric ranges; ranges must be whole voxels."""
        dims = []
        for lo, hi in (z_range, y_range, x_range):
            n = round((hi - lo) / voxel_size)
            if abs(n * voxel_size - (hi - lo)) > 1e-6:
                raise ValueError(f"range ({lo}, {hi}) is not a voxel multiple")
            dims.append(n)
        return cls(
            origin=(x_range[0], y_range[0], z_range[0]),
            voxel_size=voxel_size,
            dims=(dims[0], dims[1], dims[2]),
        )

    @classmethod
    def standard(cls) -> "GridSpec":
        """102.4 m x 102.4 m x 8 m surround volume at 0.2 m resolution."""
        return cls.from_ranges((-51.2, 51.2), (-51.2, 51.2), (-3.0, 5.0), 0.2)

    @property
    def cell_count(self) -> int:
        d, h, w = self.dims
        return d * h * w

    def scaled(self, factor: int) -> "GridSpec":
        """Coarser spec covering the same extent: dims / factor."""
        d, h, w = self.dims
        if d % factor or h % factor or w % factor:
            raise ValueError(f"dims {self.dims} not divisible by {factor}")
        return GridSpec(
            self.origin,
            self.voxel_size * factor,
            (d // factor, h // factor, w // factor),
        )

    def refined(self, factor: int) -> "GridSpec":
        """Finer spec covering the same extent: dims * factor."""
        d, h, w = self.dims
        return GridSpec(
            self.origin,
            self.voxel_size / factor,
            (d * factor, h * factor, w * factor),
        )

    def voxel_centers_world(self) -> np.ndarray:
        """(D,H,W,3) world coordinates (x,y,z) of every voxel center."""
        d, h, w = self.dims
        zc = self.origin[2] + (np.arange(d) + 0.5) * self.voxel_size
        yc = self.origin[1] + (np.arange(h) + 0.5) * self.voxel_size
        xc = self.origin[0] + (np.arange(w) + 0.5) * self.voxel_size
        out = np.empty((d, h, w, 3))
        out[..., 0] = xc[None, None, :]
        out[..., 1] = yc[None, :, None]
        out[..., 2] = zc[:, None, None]
        return out


def world_to_voxel(spec: GridSpec, p) -> np.ndarray:
    """Continuous grid coordinates (z,y,x) of world point(s) (x,y,z).

    No clamping; callers check bounds.  Non-finite input is rejected.
    """
    p = np.asarray(p, dtype=np.float64)
    if not np.isfinite(p).all():
        raise ValueError("non-finite world point")
    g = (p - np.asarray(spec.origin)) / spec.voxel_size
    return g[..., ::-1]


def voxel_to_world(spec: GridSpec, idx) -> np.ndarray:
    """World coordinates (x,y,z) of the center(s) of voxel index (z,y,x)."""
    idx = np.asarray(idx)
    d, h, w = spec.dims
    if (
        (idx[..., 0] < 0).any()
        or (idx[..., 0] >= d).any()
        or (idx[..., 1] < 0).any()
        or (idx[..., 1] >= h).any()
        or (idx[..., 2] < 0).any()
        or (idx[..., 2] >= w).any()
    ):
        raise IndexError(f"voxel index out of range for dims {spec.dims}")
    centers = (idx.astype(np.float64) + 0.5) * spec.voxel_size
    return centers[..., ::-1] + np.asarray(spec.origin)


NOISE_ID = 0
EMPTY_ID = 17

_SEMANTIC_NAMES = (
    "barrier",
    "bicycle",
    "bus",
    "car",
    "construction_vehicle",
    "motorcycle",
    "pedestrian",
    "traffic_cone",
    "trailer",
    "truck",
    "driveable_surface",
    "other_flat",
    "sidewalk",
    "terrain",
    "manmade",
    "vegetation",
)

_MOVABLE = {
    "bicycle",
    "bus",
    "car",
    "construction_vehicle",
    "motorcycle",
    "pedestrian",
    "trailer",
    "truck",
}


@dataclass(frozen=True)
class LabelEntry:
    id: int
    name: str
    kind: str  # noise | semantic | empty
    movable: bool


@dataclass(frozen=True)
class LabelSet:
    """The 18-way label vocabulary: noise (0), 16 classes, empty (17)."""

    entries: tuple[LabelEntry, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if not self.entries:
            entries = [LabelEntry(0, "noise", "noise", False)]
            for i, name in enumerate(_SEMANTIC_NAMES, start=1):
                entries.append(
                    LabelEntry(i, name, "semantic", name in _MOVABLE)
                )
            entries.append(LabelEntry(17, "empty", "empty", False))
            object.__setattr__(self, "entries", tuple(entries))
        ids = [e.id for e in self.entries]
        if ids != list(range(18)):
            raise ValueError("LabelSet must cover ids 0..17 in order")

    @property
    def semantic_ids(self) -> tuple[int, ...]:
        return tuple(e.id for e in self.entries if e.kind == "semantic")

    @property
    def movable_ids(self) -> tuple[int, ...]:
        return tuple(e.id for e in self.entries if e.movable)

    def name(self, label_id: int) -> str:
        return self.entries[label_id].name

    def id_of(self, name: str) -> int:
        for e in self.entries:
            if e.name == name:
                return e.id
        raise KeyError(name)


LABELS = LabelSet()
N_LABELS = 18


class DenseLabelGrid:
    """A (D,H,W) uint8 array of label ids attached to a GridSpec."""

    def __init__(self, spec: GridSpec, labels: np.ndarray | None = None):
        self.spec = spec
        if labels is None:
            labels = np.full(spec.dims, EMPTY_ID, dtype=np.uint8)
        labels = np.asarray(labels, dtype=np.uint8)
        if labels.shape != spec.dims:
            raise ValueError(f"labels shape {labels.shape} != dims {spec.dims}")
        if labels.max(initial=0) >= N_LABELS:
            raise ValueError("label id out of range")
        self.labels = labels

    @classmethod
    def empty(cls, spec: GridSpec) -> "DenseLabelGrid":
        return cls(spec)

    def occupied_count(self) -> int:
        return int((self.labels != EMPTY_ID).sum())

    def copy(self) -> "DenseLabelGrid":
        return DenseLabelGrid(self.spec, self.labels.copy())

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, DenseLabelGrid)
            and self.spec == other.spec
            and np.array_equal(self.labels, other.labels)
        )


class SparseOccupancy:
    """Sorted unique (z,y,x,label) records for the non-empty voxels."""

    def __init__(self, spec: GridSpec, records: np.ndarray):
        records = np.asarray(records, dtype=np.int64).reshape(-1, 4)
        d, h, w = spec.dims
        if records.size:
            if (records[:, 0] < 0).any() or (records[:, 0] >= d).any():
                raise ValueError("z index out of range")
            if (records[:, 1] < 0).any() or (records[:, 1] >= h).any():
                raise ValueError("y index out of range")
            if (records[:, 2] < 0).any() or (records[:, 2] >= w).any():
                raise ValueError("x index out of range")
            if (records[:, 3] == EMPTY_ID).any():
                raise ValueError("empty label not allowed in sparse records")
            if (records[:, 3] < 0).any() or (records[:, 3] >= N_LABELS).any():
                raise ValueError("label id out of range")
            flat = (records[:, 0] * h + records[:, 1]) * w + records[:, 2]
            if not (np.diff(flat) > 0).all():
                raise ValueError("records must be strictly increasing in (z,y,x)")
        self.spec = spec
        self.records = records

    @property
    def indices(self) -> np.ndarray:
        """(N,3) voxel indices (z,y,x)."""
        return self.records[:, :3]

    @property
    def labels(self) -> np.ndarray:
        """(N,) label ids."""
        return self.records[:, 3]

    @classmethod
    def from_dense(cls, grid: DenseLabelGrid) -> "SparseOccupancy":
        zyx = np.argwhere(grid.labels != EMPTY_ID)
        labels = grid.labels[zyx[:, 0], zyx[:, 1], zyx[:, 2]]
        records = np.concatenate(
            [zyx, labels[:, None].astype(np.int64)], axis=1
        )
        return cls(grid.spec, records)

    def to_dense(self) -> DenseLabelGrid:
        grid = DenseLabelGrid.empty(self.spec)
        r = self.records
        if r.size:
            grid.labels[r[:, 0], r[:, 1], r[:, 2]] = r[:, 3].astype(np.uint8)
        return grid

    def __len__(self) -> int:
        return self.records.shape[0]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, SparseOccupancy)
            and self.spec == other.spec
            and np.array_equal(self.records, other.records)
        )
