"""Labeled solid primitives with closed-form containment and ray casting.

A primitive set is a flat (N,9) float64 array in the kernel packing
(see occkit._kernels._pure) plus a parallel instance-id array (-1 for
static solids).  Row order is significant: containment and ray ties
both resolve to the lowest row index, so callers fix a deterministic
order once per frame and reuse it for every geometric query.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import _kernels
from .._kernels import KIND_BOX, KIND_CYLINDER
from ..geometry import BoundingBox


def box_row(label: int, center, half_size, yaw: float) -> list[float]:
    cx, cy, cz = center
    hx, hy, hz = half_size
    return [KIND_BOX, label, cx, cy, cz, hx, hy, hz, yaw]


def cylinder_row(label: int, center_xy, z0: float, z1: float, radius: float) -> list[float]:
    cx, cy = center_xy
    return [KIND_CYLINDER, label, cx, cy, z0, z1, radius, 0.0, 0.0]


def bounding_box_row(label: int, box: BoundingBox) -> list[float]:
    return box_row(label, box.center, [s / 2.0 for s in box.size], box.yaw)


@dataclass
class PrimitiveSet:
    """An ordered collection of labeled solids."""

    rows: np.ndarray = field(
        default_factory=lambda: np.zeros((0, 9), dtype=np.float64)
    )
    instance_ids: np.ndarray = field(
        default_factory=lambda: np.zeros(0, dtype=np.int32)
    )

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=np.float64).reshape(-1, 9)
        self.instance_ids = np.asarray(self.instance_ids, dtype=np.int32).reshape(-1)
        if self.rows.shape[0] != self.instance_ids.shape[0]:
            raise ValueError("rows and instance_ids length mismatch")

    @classmethod
    def build(cls, rows: list[list[float]], instance_ids=None) -> "PrimitiveSet":
        arr = np.asarray(rows, dtype=np.float64).reshape(-1, 9)
        if instance_ids is None:
            instance_ids = np.full(arr.shape[0], -1, dtype=np.int32)
        return cls(arr, instance_ids)

    def __len__(self) -> int:
        return self.rows.shape[0]

    @property
    def labels(self) -> np.ndarray:
        return self.rows[:, 1].astype(np.int32)

    @classmethod
    def concatenate(cls, sets: list["PrimitiveSet"]) -> "PrimitiveSet":
        if not sets:
            return cls()
        return cls(
            np.concatenate([s.rows for s in sets], axis=0),
            np.concatenate([s.instance_ids for s in sets], axis=0),
        )

    def label_points(self, points) -> tuple[np.ndarray, np.ndarray]:
        """(labels, instance_ids) of the first primitive containing each point.

        Points outside every primitive get label 0 / instance -1; use the
        returned hit mask from ``contains_index`` when 0 vs noise matters.
        """
        idx = self.contains_index(points)
        hit = idx >= 0
        labels = np.zeros(len(idx), dtype=np.uint8)
        inst = np.full(len(idx), -1, dtype=np.int32)
        labels[hit] = self.labels[idx[hit]]
        inst[hit] = self.instance_ids[idx[hit]]
        return labels, inst

    def contains_index(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        if len(self) == 0:
            return np.full(points.shape[0], -1, dtype=np.int32)
        return _kernels.contains(self.rows, points)

    def raycast(self, origins, dirs, t_max: float) -> tuple[np.ndarray, np.ndarray]:
        """(t, primitive_index) of the nearest hit per ray; misses are (inf,-1)."""
        origins = np.asarray(origins, dtype=np.float64).reshape(-1, 3)
        dirs = np.asarray(dirs, dtype=np.float64).reshape(-1, 3)
        if len(self) == 0:
            return (
                np.full(origins.shape[0], np.inf),
                np.full(origins.shape[0], -1, dtype=np.int32),
            )
        return _kernels.raycast(self.rows, origins, dirs, t_max)
