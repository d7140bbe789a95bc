"""Occupancy evaluation: geometric IoU and per-class mIoU.

Ground-truth noise voxels are excluded from every count.  Geometric IoU
treats any non-empty label (noise included, on the prediction side) as
occupied.  mIoU averages the 16 semantic classes with a fixed
denominator; classes absent from both grids score 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import DenseLabelGrid, EMPTY_ID, LABELS, N_LABELS, NOISE_ID
from .sampling import (
    FeatureVolume,
    argmax_labels,
    resample_argmax_labels,
    resample_probabilities,
)

SEMANTIC_IDS = LABELS.semantic_ids  # ids 1..16


@dataclass(frozen=True)
class ConfusionCounts:
    """Pairwise label counts over non-noise ground truth, plus merged
    occupied/empty counts."""

    matrix: np.ndarray  # (18,18) int64, rows gt, cols pred
    tp_occ: int
    fp_occ: int
    fn_occ: int
    counted_voxels: int

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.int64)
        if m.shape != (N_LABELS, N_LABELS):
            raise ValueError("confusion matrix must be 18x18")
        object.__setattr__(self, "matrix", m)
        if min(self.tp_occ, self.fp_occ, self.fn_occ, self.counted_voxels) < 0:
            raise ValueError("counts must be non-negative")

    @classmethod
    def zero(cls) -> "ConfusionCounts":
        return cls(np.zeros((N_LABELS, N_LABELS), dtype=np.int64), 0, 0, 0, 0)

    def merged(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(
            self.matrix + other.matrix,
            self.tp_occ + other.tp_occ,
            self.fp_occ + other.fp_occ,
            self.fn_occ + other.fn_occ,
            self.counted_voxels + other.counted_voxels,
        )

    def tp(self, label: int) -> int:
        return int(self.matrix[label, label])

    def fp(self, label: int) -> int:
        return int(self.matrix[:, label].sum() - self.matrix[label, label])

    def fn(self, label: int) -> int:
        return int(self.matrix[label, :].sum() - self.matrix[label, label])


def _count_arrays(pred: np.ndarray, gt: np.ndarray) -> ConfusionCounts:
    mask = gt != NOISE_ID
    p = pred[mask].astype(np.int64)
    g = gt[mask].astype(np.int64)
    matrix = np.bincount(g * N_LABELS + p, minlength=N_LABELS * N_LABELS)
    matrix = matrix.reshape(N_LABELS, N_LABELS)
    p_occ = p != EMPTY_ID
    g_occ = g != EMPTY_ID
    return ConfusionCounts(
        matrix,
        tp_occ=int((p_occ & g_occ).sum()),
        fp_occ=int((p_occ & ~g_occ).sum()),
        fn_occ=int((~p_occ & g_occ).sum()),
        counted_voxels=int(mask.sum()),
    )


def accumulate(pred: DenseLabelGrid, gt: DenseLabelGrid) -> ConfusionCounts:
    """Confusion counts for one grid pair on the same spec."""
    if pred.spec != gt.spec:
        raise ValueError("prediction and ground truth specs differ")
    total = ConfusionCounts.zero()
    chunk = 8
    for z0 in range(0, pred.spec.dims[0], chunk):
        z1 = min(z0 + chunk, pred.spec.dims[0])
        total = total.merged(_count_arrays(pred.labels[z0:z1], gt.labels[z0:z1]))
    return total


@dataclass(frozen=True)
class EvalResult:
    iou: float
    miou: float
    per_class_iou: np.ndarray  # (16,) floats, semantic class order
    counted_voxels: int

    def __post_init__(self):
        arr = np.asarray(self.per_class_iou, dtype=np.float64)
        if arr.shape != (len(SEMANTIC_IDS),):
            raise ValueError("per_class_iou must have 16 entries")
        object.__setattr__(self, "per_class_iou", arr)

    def to_json(self) -> str:
        per_class = ",".join(
            f'"{LABELS.name(c)}":{v:.4f}'
            for c, v in zip(SEMANTIC_IDS, self.per_class_iou)
        )
        return (
            f'{{"iou":{self.iou:.4f},"miou":{self.miou:.4f},'
            f'"per_class":{{{per_class}}}}}'
        )


def result_from_counts(counts: ConfusionCounts) -> EvalResult:
    per_class = np.zeros(len(SEMANTIC_IDS))
    for i, c in enumerate(SEMANTIC_IDS):
        denom = counts.tp(c) + counts.fp(c) + counts.fn(c)
        per_class[i] = counts.tp(c) / denom if denom > 0 else 0.0
    occ_denom = counts.tp_occ + counts.fp_occ + counts.fn_occ
    iou = counts.tp_occ / occ_denom if occ_denom > 0 else 0.0
    return EvalResult(
        iou=iou,
        miou=float(per_class.mean()),
        per_class_iou=per_class,
        counted_voxels=counts.counted_voxels,
    )


def _validate_distribution(values: np.ndarray) -> None:
    if values.shape[-1] != N_LABELS:
        raise ValueError("prediction volume must carry 18 channels")
    if (values < 0).any():
        raise ValueError("probabilities must be non-negative")
    sums = values.sum(axis=-1)
    if not np.allclose(sums, 1.0, atol=1e-6):
        raise ValueError("per-voxel probabilities must sum to 1")


def evaluate(pred_probs: FeatureVolume, gt: DenseLabelGrid) -> EvalResult:
    """Resample the prediction to the ground-truth dims, take the
    argmax, and count.

    The resample-argmax path runs fused and chunked and never
    materializes the full-resolution probability volume; see
    resample_argmax_labels for why skipping renormalization is exact.
    """
    _validate_distribution(np.asarray(pred_probs.values))
    pred = resample_argmax_labels(pred_probs, gt.spec.dims)
    pred = DenseLabelGrid(gt.spec, pred.labels)
    return result_from_counts(accumulate(pred, gt))


def evaluate_labels(pred: DenseLabelGrid, gt: DenseLabelGrid) -> EvalResult:
    """Evaluation of an already-dense label prediction on the gt spec."""
    return result_from_counts(accumulate(pred, gt))


def upsample_then_argmax(pred_probs: FeatureVolume, target_spec) -> DenseLabelGrid:
    """Reference (non-fused) path: full probability resample, then argmax."""
    resampled = resample_probabilities(pred_probs, target_spec.dims)
    return argmax_labels(resampled)


def report_table(results: list[tuple[str, EvalResult]]) -> str:
    """Fixed-order text table: IoU, mIoU, then the 16 classes; percent
    with one decimal."""
    headers = ["Method", "IoU", "mIoU"] + [LABELS.name(c) for c in SEMANTIC_IDS]
    rows = []
    for name, res in results:
        cells = [name, f"{100 * res.iou:.1f}", f"{100 * res.miou:.1f}"]
        cells += [f"{100 * v:.1f}" for v in res.per_class_iou]
        rows.append(cells)
    widths = [len(h) for h in headers]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    def fmt(cells):
        return "  ".join(c.ljust(w) if i == 0 else c.rjust(w)
                         for i, (c, w) in enumerate(zip(cells, widths)))
    lines = [fmt(headers)]
    lines.extend(fmt(row) for row in rows)
    return "\n".join(lines) + "\n"
