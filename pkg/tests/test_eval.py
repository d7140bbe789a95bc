"""Confusion accumulation, IoU/mIoU math, and report formatting.

Pinned hand case: pred occupies {(0,0,0),(0,0,1)} as car, gt occupies
{(0,0,1) car, (0,1,0) car}.  Occupancy: TP={(0,0,1)}, FP={(0,0,0)},
FN={(0,1,0)} -> IoU = 1/(1+1+1) = 1/3.  Car voxel counts are the same
three, so car IoU is also 1/3.
"""

from __future__ import annotations

import numpy as np
import pytest

from occkit.evaluation import (
    ConfusionCounts,
    EvalResult,
    accumulate,
    evaluate,
    evaluate_labels,
    report_table,
    result_from_counts,
    upsample_then_argmax,
)
from occkit.grid import (
    DenseLabelGrid,
    EMPTY_ID,
    GridSpec,
    LABELS,
    N_LABELS,
    NOISE_ID,
)
from occkit.network import softmax
from occkit.sampling import FeatureVolume

CAR = LABELS.id_of("car")
SIDEWALK = LABELS.id_of("sidewalk")

SPEC4 = GridSpec((0.0, 0.0, 0.0), 1.0, (4, 4, 4))


def _grid(spec: GridSpec, labels=None) -> DenseLabelGrid:
    g = DenseLabelGrid.empty(spec)
    if labels is not None:
        g.labels[:] = labels
    return g


def _random_grid(rng, spec=SPEC4, with_noise=False) -> DenseLabelGrid:
    low = 0 if with_noise else 1
    g = _grid(spec)
    g.labels[:] = rng.integers(low, 18, size=spec.dims)
    return g


def _oracle_counts(pred: np.ndarray, gt: np.ndarray):
    """Triple-loop reference: per-class TP/FP/FN and occupancy counts,
    skipping noise ground truth."""
    tp = np.zeros(N_LABELS, dtype=int)
    fp = np.zeros(N_LABELS, dtype=int)
    fn = np.zeros(N_LABELS, dtype=int)
    tp_o = fp_o = fn_o = counted = 0
    d, h, w = gt.shape
    for z in range(d):
        for y in range(h):
            for x in range(w):
                g = int(gt[z, y, x])
                if g == NOISE_ID:
                    continue
                counted += 1
                p = int(pred[z, y, x])
                if p == g:
                    tp[g] += 1
                else:
                    fp[p] += 1
                    fn[g] += 1
                if p != EMPTY_ID and g != EMPTY_ID:
                    tp_o += 1
                elif p != EMPTY_ID:
                    fp_o += 1
                elif g != EMPTY_ID:
                    fn_o += 1
    return tp, fp, fn, tp_o, fp_o, fn_o, counted


# ── accumulate ───────────────────────────────────────────────────────


def test_accumulate_perfect_prediction(rng):
    gt = _random_grid(rng)
    counts = accumulate(gt.copy(), gt)
    for c in range(N_LABELS):
        assert counts.fp(c) == 0 and counts.fn(c) == 0
    assert counts.fp_occ == 0 and counts.fn_occ == 0
    assert counts.counted_voxels == 64


def test_accumulate_hand_case_one_third():
    pred = _grid(SPEC4)
    pred.labels[0, 0, 0] = CAR
    pred.labels[0, 0, 1] = CAR
    gt = _grid(SPEC4)
    gt.labels[0, 0, 1] = CAR
    gt.labels[0, 1, 0] = CAR
    counts = accumulate(pred, gt)
    assert (counts.tp_occ, counts.fp_occ, counts.fn_occ) == (1, 1, 1)
    result = result_from_counts(counts)
    assert result.iou == pytest.approx(1.0 / 3.0)
    assert result.per_class_iou[CAR - 1] == pytest.approx(1.0 / 3.0)


def test_accumulate_masks_noise_ground_truth():
    pred = _grid(SPEC4)
    pred.labels[1, 1, 1] = CAR
    gt = _grid(SPEC4)
    gt.labels[1, 1, 1] = NOISE_ID
    counts = accumulate(pred, gt)
    assert counts.matrix.sum() == 63
    assert counts.fp(CAR) == 0 and counts.tp_occ == 0 and counts.fp_occ == 0
    assert counts.counted_voxels == 63


def test_accumulate_rejects_spec_mismatch():
    other = GridSpec((0.0, 0.0, 0.0), 0.5, (4, 4, 4))
    with pytest.raises(ValueError, match="specs"):
        accumulate(_grid(SPEC4), _grid(other))


def test_accumulate_matches_triple_loop_oracle(rng):
    pred = _random_grid(rng, with_noise=True)
    gt = _random_grid(rng, with_noise=True)
    counts = accumulate(pred, gt)
    tp, fp, fn, tp_o, fp_o, fn_o, counted = _oracle_counts(pred.labels, gt.labels)
    for c in range(N_LABELS):
        assert counts.tp(c) == tp[c]
        assert counts.fp(c) == fp[c]
        assert counts.fn(c) == fn[c]
    assert (counts.tp_occ, counts.fp_occ, counts.fn_occ) == (tp_o, fp_o, fn_o)
    assert counts.counted_voxels == counted


def test_accumulate_symmetry_swaps_fp_fn(rng):
    # noise-free grids: the mask is identical both ways
    a = _random_grid(rng)
    b = _random_grid(rng)
    ab = accumulate(a, b)
    ba = accumulate(b, a)
    for c in range(N_LABELS):
        assert ab.tp(c) == ba.tp(c)
        assert ab.fp(c) == ba.fn(c)
        assert ab.fn(c) == ba.fp(c)
    assert ab.tp_occ == ba.tp_occ
    assert ab.fp_occ == ba.fn_occ


def test_confusion_counts_merge_and_validation(rng):
    a = accumulate(_random_grid(rng), _random_grid(rng))
    merged = a.merged(ConfusionCounts.zero())
    np.testing.assert_array_equal(merged.matrix, a.matrix)
    both = a.merged(a)
    assert both.counted_voxels == 2 * a.counted_voxels
    with pytest.raises(ValueError, match="18x18"):
        ConfusionCounts(np.zeros((17, 17), dtype=np.int64), 0, 0, 0, 0)
    with pytest.raises(ValueError, match="non-negative"):
        ConfusionCounts(np.zeros((18, 18), dtype=np.int64), -1, 0, 0, 0)


# ── evaluate ─────────────────────────────────────────────────────────


def _one_hot(grid: DenseLabelGrid) -> FeatureVolume:
    probs = np.zeros((*grid.spec.dims, N_LABELS))
    flat = probs.reshape(-1, N_LABELS)
    flat[np.arange(flat.shape[0]), grid.labels.reshape(-1)] = 1.0
    return FeatureVolume(grid.spec, probs)


def test_evaluate_one_hot_of_gt_is_perfect(rng):
    gt = _random_grid(rng)
    result = evaluate(_one_hot(gt), gt)
    assert result.iou == 1.0
    present = np.unique(gt.labels)
    for i, c in enumerate(range(1, 17)):
        expected = 1.0 if c in present else 0.0
        assert result.per_class_iou[i] == expected


def test_evaluate_uniform_empty_prediction_scores_zero(rng):
    coarse = GridSpec((0.0, 0.0, 0.0), 2.0, (2, 2, 2))
    probs = np.zeros((2, 2, 2, N_LABELS))
    probs[..., EMPTY_ID] = 1.0
    gt = _random_grid(rng)
    result = evaluate(FeatureVolume(coarse, probs), gt)
    assert result.iou == 0.0
    assert result.miou == 0.0


def test_evaluate_equals_two_step_reference(rng):
    coarse = GridSpec((0.0, 0.0, 0.0), 2.0, (2, 2, 2))
    probs = softmax(rng.normal(size=(2, 2, 2, N_LABELS)) * 2)
    gt = _random_grid(rng)
    fused = evaluate(FeatureVolume(coarse, probs), gt)
    two_step = evaluate_labels(
        DenseLabelGrid(
            SPEC4,
            upsample_then_argmax(FeatureVolume(coarse, probs), SPEC4).labels,
        ),
        gt,
    )
    assert fused.to_json() == two_step.to_json()


def test_evaluate_invariant_to_prediction_at_noise_voxels(rng):
    gt = _random_grid(rng, with_noise=True)
    noise = gt.labels == NOISE_ID
    assert noise.any()
    pred = _one_hot(_random_grid(rng))
    a = evaluate(pred, gt)
    redirected = pred.values.copy()
    redirected[noise] = 0.0
    redirected[noise, CAR] = 1.0
    b = evaluate(FeatureVolume(pred.spec, redirected), gt)
    assert a.to_json() == b.to_json()


def test_evaluate_validates_distributions(rng):
    gt = _random_grid(rng)
    bad = np.full((4, 4, 4, 17), 1.0 / 17.0)
    with pytest.raises(ValueError, match="18"):
        evaluate(FeatureVolume(SPEC4, bad), gt)
    neg = np.full((4, 4, 4, 18), 1.0 / 18.0)
    neg[0, 0, 0, 0] = -0.1
    with pytest.raises(ValueError, match="non-negative"):
        evaluate(FeatureVolume(SPEC4, neg), gt)
    unnorm = np.full((4, 4, 4, 18), 1.0)
    with pytest.raises(ValueError, match="sum"):
        evaluate(FeatureVolume(SPEC4, unnorm), gt)


def test_evaluate_deterministic(rng):
    gt = _random_grid(rng)
    probs = FeatureVolume(SPEC4, softmax(rng.normal(size=(4, 4, 4, 18))))
    assert evaluate(probs, gt).to_json() == evaluate(probs, gt).to_json()


# ── results and reporting ────────────────────────────────────────────


def test_result_json_formatting():
    result = EvalResult(
        iou=1.0 / 3.0,
        miou=0.20125,
        per_class_iou=np.linspace(0.0, 1.0, 16),
        counted_voxels=100,
    )
    text = result.to_json()
    assert '"iou":0.3333' in text
    assert '"miou":0.2013' in text or '"miou":0.2012' in text
    assert '"barrier":0.0000' in text
    assert '"vegetation":1.0000' in text


def test_report_table_perfect_row(rng):
    gt = _random_grid(rng)
    result = evaluate_labels(gt.copy(), gt)
    table = report_table([("perfect", result)])
    lines = table.strip().split("\n")
    assert len(lines) == 2
    assert lines[0].startswith("Method")
    assert "100.0" in lines[1]


def test_report_table_reference_row_display():
    row = EvalResult(
        iou=0.295, miou=0.201, per_class_iou=np.full(16, 0.2), counted_voxels=0
    )
    table = report_table([("M-CONet", row)])
    body = table.strip().split("\n")[1]
    assert "29.5" in body
    assert "20.1" in body


def test_report_table_empty_is_header_only():
    table = report_table([])
    lines = table.strip().split("\n")
    assert len(lines) == 1
    assert "IoU" in lines[0] and "mIoU" in lines[0]
