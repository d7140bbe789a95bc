"""Procedural urban scene generation.

A scene is a world-frame arrangement of grid-snapped static solids, a
set of moving labeled boxes (one track per object, one box per frame),
and a straight-line ego trajectory.  Everything is a deterministic
function of (seed, config): the generator draws exclusively from
splitmix64 streams forked in a fixed order.

Static solid boundaries land on multiples of 0.2 m so that no standard
voxel center (odd multiples of 0.1 m) ever sits exactly on a primitive
face; closed vs. open containment then never disagrees on box faces.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from importlib import resources

import jsonschema
import numpy as np

from ..geometry import BoundingBox, Pose
from ..grid import LABELS
from ..rng import SplitMix64
from .primitives import PrimitiveSet, bounding_box_row, box_row, cylinder_row

_SNAP = 0.2


def _snap(v: float) -> float:
    return round(v / _SNAP) * _SNAP


@dataclass(frozen=True)
class CameraRigConfig:
    count: int = 6
    width: int = 160
    height: int = 120
    fov_deg: float = 70.0
    height_m: float = 1.6
    pitch_deg: float = -10.0


@dataclass(frozen=True)
class LidarConfig:
    channels: int = 8
    azimuth_steps: int = 720
    elev_min_deg: float = -24.0
    elev_max_deg: float = 2.0
    height_m: float = 1.84
    max_range: float = 70.0


@dataclass(frozen=True)
class SceneConfig:
    """Generator knobs; ``extent`` is the half-extent of the scene in XY."""

    extent: float = 51.2
    object_count: int = 8
    frame_count: int = 10
    ego_speed: float = 3.0
    camera: CameraRigConfig = field(default_factory=CameraRigConfig)
    lidar: LidarConfig = field(default_factory=LidarConfig)

    def __post_init__(self):
        if self.extent <= 0:
            raise ValueError("degenerate config: zero extent")
        if self.extent < 24.0 or self.extent > 51.2:
            raise ValueError("extent must be in [24.0, 51.2] meters")
        if abs(_snap(self.extent) - self.extent) > 1e-9:
            raise ValueError("extent must be a multiple of 0.2")
        if self.frame_count < 1:
            raise ValueError("frame_count must be >= 1")
        if self.object_count < 0:
            raise ValueError("object_count must be >= 0")

    def to_json_obj(self) -> dict:
        return {
            "extent": self.extent,
            "object_count": self.object_count,
            "frame_count": self.frame_count,
            "ego_speed": self.ego_speed,
            "camera": {
                "count": self.camera.count,
                "width": self.camera.width,
                "height": self.camera.height,
                "fov_deg": self.camera.fov_deg,
                "height_m": self.camera.height_m,
                "pitch_deg": self.camera.pitch_deg,
            },
            "lidar": {
                "channels": self.lidar.channels,
                "azimuth_steps": self.lidar.azimuth_steps,
                "elev_min_deg": self.lidar.elev_min_deg,
                "elev_max_deg": self.lidar.elev_max_deg,
                "height_m": self.lidar.height_m,
                "max_range": self.lidar.max_range,
            },
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "SceneConfig":
        validate_config(obj)
        cam = obj.get("camera", {})
        lid = obj.get("lidar", {})
        return cls(
            extent=obj.get("extent", 51.2),
            object_count=obj.get("object_count", 8),
            frame_count=obj.get("frame_count", 10),
            ego_speed=obj.get("ego_speed", 3.0),
            camera=CameraRigConfig(**cam),
            lidar=LidarConfig(**lid),
        )


def _config_schema() -> dict:
    text = (
        resources.files("occkit")
        .joinpath("schemas/scene_config.schema.json")
        .read_text()
    )
    return json.loads(text)


def validate_config(obj: dict) -> None:
    jsonschema.validate(obj, _config_schema())


@dataclass(frozen=True)
class ObjectTrack:
    """One movable object: a box per frame, tied by instance id."""

    instance_id: int
    label: int
    boxes: tuple[BoundingBox, ...]

    def __post_init__(self):
        if self.label not in LABELS.movable_ids:
            raise ValueError(f"label {self.label} is not movable")


@dataclass(frozen=True)
class Scene:
    seed: int
    config: SceneConfig
    static_primitives: PrimitiveSet
    tracks: tuple[ObjectTrack, ...]
    ego_poses: tuple[Pose, ...]

    @property
    def frame_count(self) -> int:
        return len(self.ego_poses)

    def frame_primitives(self, frame_index: int) -> PrimitiveSet:
        """World-frame solids at one frame: movable boxes first, then static.

        Order is fixed so containment / ray ties resolve identically in
        ground truth, LiDAR simulation, and rendering.
        """
        rows = []
        ids = []
        for tr in self.tracks:
            rows.append(bounding_box_row(tr.label, tr.boxes[frame_index]))
            ids.append(tr.instance_id)
        movable = PrimitiveSet.build(rows, np.asarray(ids, dtype=np.int32))
        return PrimitiveSet.concatenate([movable, self.static_primitives])

    def to_json_obj(self) -> dict:
        prims = []
        for row in self.static_primitives.rows:
            if int(row[0]) == 0:
                prims.append(
                    {
                        "kind": "box",
                        "label": int(row[1]),
                        "center": [row[2], row[3], row[4]],
                        "half_size": [row[5], row[6], row[7]],
                        "yaw": row[8],
                    }
                )
            else:
                prims.append(
                    {
                        "kind": "cylinder",
                        "label": int(row[1]),
                        "center_xy": [row[2], row[3]],
                        "z0": row[4],
                        "z1": row[5],
                        "radius": row[6],
                    }
                )
        tracks = [
            {
                "instance_id": tr.instance_id,
                "label": tr.label,
                "boxes": [
                    {
                        "center": list(b.center),
                        "size": list(b.size),
                        "yaw": b.yaw,
                    }
                    for b in tr.boxes
                ],
            }
            for tr in self.tracks
        ]
        poses = [
            {
                "rotation": [list(r) for r in p.rotation],
                "translation": list(p.translation),
            }
            for p in self.ego_poses
        ]
        return {
            "seed": self.seed,
            "config": self.config.to_json_obj(),
            "static_primitives": prims,
            "tracks": tracks,
            "ego_poses": poses,
        }

    def to_json(self) -> str:
        return canonical_json(self.to_json_obj())

    @classmethod
    def from_json_obj(cls, obj: dict) -> "Scene":
        rows = []
        for p in obj["static_primitives"]:
            if p["kind"] == "box":
                rows.append(
                    box_row(p["label"], p["center"], p["half_size"], p["yaw"])
                )
            else:
                rows.append(
                    cylinder_row(
                        p["label"], p["center_xy"], p["z0"], p["z1"], p["radius"]
                    )
                )
        tracks = tuple(
            ObjectTrack(
                t["instance_id"],
                t["label"],
                tuple(
                    BoundingBox(tuple(b["center"]), tuple(b["size"]), b["yaw"])
                    for b in t["boxes"]
                ),
            )
            for t in obj["tracks"]
        )
        poses = tuple(
            Pose(np.asarray(p["rotation"]), np.asarray(p["translation"]))
            for p in obj["ego_poses"]
        )
        return cls(
            seed=obj["seed"],
            config=SceneConfig.from_json_obj(obj["config"]),
            static_primitives=PrimitiveSet.build(rows),
            tracks=tracks,
            ego_poses=poses,
        )

    @classmethod
    def from_json(cls, text: str) -> "Scene":
        return cls.from_json_obj(json.loads(text))


def canonical_json(obj) -> str:
    """Deterministic JSON: sorted keys, no whitespace, floats as %.9g."""
    parts: list[str] = []
    _emit(obj, parts)
    return "".join(parts)


def _emit(obj, parts: list[str]) -> None:
    if isinstance(obj, dict):
        parts.append("{")
        for i, k in enumerate(sorted(obj)):
            if i:
                parts.append(",")
            if not isinstance(k, str):
                raise TypeError("canonical JSON keys must be strings")
            parts.append(json.dumps(k))
            parts.append(":")
            _emit(obj[k], parts)
        parts.append("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        parts.append("[")
        for i, v in enumerate(obj):
            if i:
                parts.append(",")
            _emit(v, parts)
        parts.append("]")
    elif isinstance(obj, bool):
        parts.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        parts.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        f = float(obj)
        if not np.isfinite(f):
            raise ValueError("non-finite float in canonical JSON")
        parts.append("%.9g" % f)
    elif isinstance(obj, str):
        parts.append(json.dumps(obj))
    elif obj is None:
        parts.append("null")
    else:
        raise TypeError(f"cannot canonicalize {type(obj)}")


# Movable class catalog: label id -> (length, width, height) meters.
CLASS_SIZES = {
    2: (1.7, 0.6, 1.2),  # bicycle
    3: (11.0, 2.9, 3.4),  # bus
    4: (4.5, 1.9, 1.6),  # car
    5: (6.0, 2.5, 3.0),  # construction_vehicle
    6: (2.1, 0.8, 1.4),  # motorcycle
    7: (0.6, 0.6, 1.7),  # pedestrian
    9: (10.0, 2.9, 3.8),  # trailer
    10: (7.0, 2.5, 2.9),  # truck
}

_VEHICLE_LANES = (-5.2, -2.6, 2.6, 5.2)


def _gen_static(rng: SplitMix64, extent: float) -> PrimitiveSet:
    e = extent
    rows = [
        # flat ground partition, all slabs z in [-0.2, 0]
        box_row(LABELS.id_of("driveable_surface"), (0, 0, -0.1), (e, 8.0, 0.1), 0.0),
        box_row(LABELS.id_of("sidewalk"), (0, 9.6, -0.1), (e, 1.6, 0.1), 0.0),
        box_row(LABELS.id_of("sidewalk"), (0, -9.6, -0.1), (e, 1.6, 0.1), 0.0),
        box_row(LABELS.id_of("other_flat"), (0, 12.0, -0.1), (e, 0.8, 0.1), 0.0),
        box_row(
            LABELS.id_of("terrain"),
            (0, (12.8 + e) / 2, -0.1),
            (e, (e - 12.8) / 2, 0.1),
            0.0,
        ),
        box_row(
            LABELS.id_of("terrain"),
            (0, -(11.2 + e) / 2, -0.1),
            (e, (e - 11.2) / 2, 0.1),
            0.0,
        ),
    ]
    for _ in range(rng.randint(3, 6)):  # barriers along road edges
        side = rng.choice((-1.0, 1.0))
        x0 = _snap(rng.uniform(-e + 2.0, e - 14.0))
        x1 = x0 + _snap(rng.uniform(4.0, 12.0))
        rows.append(
            box_row(
                LABELS.id_of("barrier"),
                ((x0 + x1) / 2, side * 7.8, 0.5),
                ((x1 - x0) / 2, 0.2, 0.5),
                0.0,
            )
        )
    for _ in range(rng.randint(3, 6)):  # buildings on terrain
        side = rng.choice((-1.0, 1.0))
        wx = _snap(rng.uniform(4.0, 10.0))
        wy = _snap(rng.uniform(3.0, 8.0))
        h = _snap(rng.uniform(3.0, 8.0))
        cx = _snap(rng.uniform(-e + 6.0, e - 6.0))
        cy = side * _snap(rng.uniform(14.0 + wy / 2, e - 1.0 - wy / 2))
        rows.append(
            box_row(
                LABELS.id_of("manmade"), (cx, cy, h / 2), (wx / 2, wy / 2, h / 2), 0.0
            )
        )
    for _ in range(rng.randint(4, 9)):  # vegetation on terrain
        side = rng.choice((-1.0, 1.0))
        r = _snap(rng.uniform(0.4, 1.2))
        h = _snap(rng.uniform(2.0, 5.0))
        cx = _snap(rng.uniform(-e + 3.0, e - 3.0))
        cy = side * _snap(rng.uniform(14.0, e - 3.0))
        rows.append(cylinder_row(LABELS.id_of("vegetation"), (cx, cy), 0.0, h, r))
    for _ in range(rng.randint(2, 5)):  # traffic cones near road edges
        side = rng.choice((-1.0, 1.0))
        cx = _snap(rng.uniform(-e + 4.0, e - 4.0))
        cy = side * _snap(rng.uniform(6.0, 7.2))
        rows.append(cylinder_row(LABELS.id_of("traffic_cone"), (cx, cy), 0.0, 0.6, 0.2))
    return PrimitiveSet.build(rows)


def _gen_track(
    rng: SplitMix64, instance_id: int, extent: float, frame_count: int, ego_speed: float
) -> ObjectTrack:
    label = rng.choice(tuple(sorted(CLASS_SIZES)))
    base = CLASS_SIZES[label]
    size = tuple(s * rng.uniform(0.9, 1.1) for s in base)
    name = LABELS.name(label)
    if name == "pedestrian":
        lane_y = rng.choice((-1.0, 1.0)) * rng.uniform(8.6, 10.6)
        speed = rng.uniform(0.6, 1.4)
    elif name in ("bicycle", "motorcycle"):
        lane_y = rng.choice((-1.0, 1.0)) * rng.uniform(6.0, 7.0)
        speed = rng.uniform(2.0, 4.0)
    else:
        lane_y = rng.choice(_VEHICLE_LANES) + rng.uniform(-0.4, 0.4)
        speed = rng.uniform(2.0, 5.0)
    direction = rng.choice((-1.0, 1.0))
    yaw = 0.0 if direction > 0 else np.pi
    margin = size[0] / 2 + 2.0
    if frame_count > 1:
        # slow down objects whose full path would leave the scene
        speed = min(speed, (extent - margin - 1.0) / (frame_count - 1))
    span = speed * (frame_count - 1)
    c_max = extent - margin - span / 2
    xc = rng.uniform(-c_max, c_max)
    boxes = tuple(
        BoundingBox(
            (
                xc + direction * speed * (t - (frame_count - 1) / 2),
                lane_y,
                size[2] / 2,
            ),
            size,
            yaw,
        )
        for t in range(frame_count)
    )
    return ObjectTrack(instance_id, label, boxes)


def generate_scene(seed: int, config: SceneConfig | None = None) -> Scene:
    """Deterministic scene from (seed, config); see module docstring."""
    if config is None:
        config = SceneConfig()
    base = SplitMix64(seed)
    rng_static = base.fork(1)
    rng_objects = base.fork(2)
    static = _gen_static(rng_static, config.extent)
    tracks = tuple(
        _gen_track(
            rng_objects, 1000 + i, config.extent, config.frame_count, config.ego_speed
        )
        for i in range(config.object_count)
    )
    half_path = config.ego_speed * (config.frame_count - 1) / 2
    ego = tuple(
        Pose(
            np.eye(3),
            (config.ego_speed * t - half_path, 0.0, 0.0),
        )
        for t in range(config.frame_count)
    )
    return Scene(
        seed=seed,
        config=config,
        static_primitives=static,
        tracks=tracks,
        ego_poses=ego,
    )


def scene_with_config(scene: Scene, **updates) -> Scene:
    """Scene with a shallow config override (lidar/camera knobs)."""
    return replace(scene, config=replace(scene.config, **updates))
