"""occkit: synthetic semantic-occupancy tooling.

Grids, sensors, and pipelines for building, densifying, refining, and
evaluating 3D semantic occupancy at desk scale: a synthetic scene
generator with LiDAR and camera simulation, an annotation-densification
pipeline with journaled human edits, fixed-weight voxel networks with a
coarse-to-fine refinement stage, the evaluation protocol, a compact
binary grid format, a CLI, and an HTTP annotation service.
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .aap import (
    Edit,
    EditJournal,
    FramePoints,
    SuperimposedCloud,
    apply_edits,
    augment,
    densification_stats,
    superimpose,
    validate_edits,
    voxelize,
)
from .conet import (
    FineFusionConfig,
    QuerySet,
    extract_occupied,
    fuse_fine,
    load_fine_fusion,
    refine,
    sample_geometric,
    sample_semantic,
    scatter_volume,
    split_voxels,
)
from .evaluation import (
    ConfusionCounts,
    EvalResult,
    accumulate,
    evaluate,
    evaluate_labels,
    report_table,
    result_from_counts,
)
from .geometry import (
    BoundingBox,
    CameraModel,
    PointCloud,
    Pose,
    project_to_camera,
)
from .grid import (
    EMPTY_ID,
    LABELS,
    N_LABELS,
    NOISE_ID,
    DenseLabelGrid,
    GridSpec,
    LabelSet,
    SparseOccupancy,
)
from .losses import LossReport, cross_entropy, lovasz_softmax, total_loss
from .network import (
    EncoderConfig,
    HeadConfig,
    adaptive_fuse,
    baseline_forward,
    camera_encode,
    decode_and_head,
    encode_features,
    flop_count,
    lidar_encode,
    load_head,
    memory_estimate,
)
from .occ1 import (
    Occ1Error,
    occ1_read,
    occ1_read_file,
    occ1_write,
    occ1_write_file,
)
from .rng import SplitMix64
from .sampling import (
    FeatureVolume,
    ImageFeatureMap,
    argmax_labels,
    bilinear_sample_2d,
    resample_argmax_labels,
    resample_probabilities,
    trilinear_sample_3d,
)
from .synth import (
    Scene,
    SceneConfig,
    build_frame_sensor_data,
    generate_scene,
    ground_truth_occupancy,
    render_views,
    simulate_lidar,
)

__version__ = "0.1.0"

__all__ = [
    "KERNEL_BACKEND",
    "__version__",
    # grid
    "GridSpec", "LabelSet", "LABELS", "DenseLabelGrid", "SparseOccupancy",
    "NOISE_ID", "EMPTY_ID", "N_LABELS",
    # geometry
    "Pose", "CameraModel", "PointCloud", "BoundingBox", "project_to_camera",
    # sampling
    "FeatureVolume", "ImageFeatureMap", "trilinear_sample_3d",
    "bilinear_sample_2d", "resample_probabilities", "resample_argmax_labels",
    "argmax_labels",
    # synth
    "Scene", "SceneConfig", "generate_scene", "simulate_lidar", "render_views",
    "ground_truth_occupancy", "build_frame_sensor_data",
    # aap
    "SuperimposedCloud", "FramePoints", "superimpose", "voxelize", "augment", "Edit",
    "EditJournal", "apply_edits", "validate_edits", "densification_stats",
    # network
    "EncoderConfig", "HeadConfig", "load_head", "lidar_encode", "camera_encode",
    "adaptive_fuse", "decode_and_head", "encode_features", "baseline_forward",
    "flop_count", "memory_estimate",
    # conet
    "QuerySet", "FineFusionConfig", "load_fine_fusion", "extract_occupied",
    "split_voxels", "sample_semantic", "sample_geometric", "fuse_fine",
    "scatter_volume", "refine",
    # losses
    "cross_entropy", "lovasz_softmax", "total_loss", "LossReport",
    # evaluation
    "ConfusionCounts", "EvalResult", "accumulate", "result_from_counts",
    "evaluate", "evaluate_labels", "report_table",
    # occ1
    "occ1_read", "occ1_write", "occ1_read_file", "occ1_write_file", "Occ1Error",
    # rng
    "SplitMix64",
]
