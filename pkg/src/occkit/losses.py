"""Training-style objectives with analytic gradients.

Nothing here is optimized by the package itself; the losses exist so
that externally trained weights can be validated and so the gradient
contracts are pinned by finite-difference tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import DenseLabelGrid, N_LABELS, NOISE_ID
from .sampling import FeatureVolume

_CLAMP = 1e-12


def _flatten(probs: FeatureVolume, target: DenseLabelGrid) -> tuple[np.ndarray, np.ndarray]:
    if probs.spec != target.spec:
        raise ValueError("probability volume and target grids differ")
    p = probs.values.reshape(-1, N_LABELS).astype(np.float64)
    t = target.labels.reshape(-1).astype(np.int64)
    return p, t


def cross_entropy(
    probs: FeatureVolume,
    target: DenseLabelGrid,
    ignore: frozenset[int] | set[int] = frozenset({NOISE_ID}),
) -> tuple[float, np.ndarray]:
    """Mean negative log-probability of the target label.

    Voxels whose target is in ``ignore`` contribute nothing.  Returns
    the scalar and the gradient with respect to the logits that produced
    ``probs`` via softmax: (p - onehot) / n_counted, zero on ignored
    voxels.
    """
    p, t = _flatten(probs, target)
    mask = ~np.isin(t, list(ignore))
    n_eff = int(mask.sum())
    if n_eff == 0:
        raise ValueError("all voxels carry ignored labels")
    pm = p[mask]
    tm = t[mask]
    picked = np.clip(pm[np.arange(n_eff), tm], _CLAMP, None)
    value = float(-np.log(picked).mean())

    grad = np.zeros_like(p)
    g = pm.copy()
    g[np.arange(n_eff), tm] -= 1.0
    grad[mask] = g / n_eff
    return value, grad.reshape(probs.values.shape)


def _jaccard_extension(fg_sorted: np.ndarray) -> np.ndarray:
    """Gradient vector of the lovasz extension for one class, given the
    binary ground-truth vector in error-sorted order."""
    gts = fg_sorted.sum()
    intersection = gts - np.cumsum(fg_sorted)
    union = gts + np.cumsum(1.0 - fg_sorted)
    jaccard = 1.0 - intersection / union
    out = jaccard.copy()
    out[1:] = jaccard[1:] - jaccard[:-1]
    return out


def lovasz_softmax(
    probs: FeatureVolume,
    target: DenseLabelGrid,
    ignore: frozenset[int] | set[int] = frozenset({NOISE_ID}),
) -> tuple[float, np.ndarray]:
    """Lovasz extension of the Jaccard loss, averaged over the classes
    present in the (non-ignored) target.

    Returns the scalar and its gradient with respect to the
    probabilities (the sort permutation is treated as fixed, which is
    exact almost everywhere).
    """
    p, t = _flatten(probs, target)
    mask = ~np.isin(t, list(ignore))
    if not mask.any():
        raise ValueError("all voxels carry ignored labels")
    pm = p[mask]
    tm = t[mask]
    present = np.unique(tm)
    total = 0.0
    grad = np.zeros_like(p)
    gm = np.zeros_like(pm)
    for c in present:
        fg = (tm == c).astype(np.float64)
        pc = pm[:, c]
        errors = np.abs(fg - pc)
        order = np.argsort(-errors, kind="stable")
        jg = _jaccard_extension(fg[order])
        total += float(errors[order] @ jg)
        # d|fg - p|/dp is -1 on the class voxels (fg=1) and +1 elsewhere
        sign = np.where(fg > 0.5, -1.0, 1.0)
        back = np.empty_like(jg)
        back[order] = jg
        gm[:, c] += sign * back
    n_present = len(present)
    value = total / n_present
    grad[mask] = gm / n_present
    return value, grad.reshape(probs.values.shape)


@dataclass(frozen=True)
class LossReport:
    """Itemized objective; ``total`` is the plain sum of the terms."""

    cross_entropy: float
    lovasz: float
    depth: float = 0.0
    semantic_2d: float = 0.0
    explicit_depth: float = 0.0
    extras: dict = field(default_factory=dict)

    @property
    def total(self) -> float:
        return (
            self.cross_entropy
            + self.lovasz
            + self.depth
            + self.semantic_2d
            + self.explicit_depth
        )

    def to_json_obj(self) -> dict:
        return {
            "cross_entropy": self.cross_entropy,
            "lovasz": self.lovasz,
            "depth": self.depth,
            "semantic_2d": self.semantic_2d,
            "explicit_depth": self.explicit_depth,
            "total": self.total,
        }


def total_loss(
    l_ce: float,
    l_ls: float,
    depth: float = 0.0,
    semantic_2d: float = 0.0,
    explicit_depth: float = 0.0,
) -> LossReport:
    """Sum of the occupancy terms and optional externally supplied
    auxiliary terms.  Every term must be finite."""
    report = LossReport(
        cross_entropy=float(l_ce),
        lovasz=float(l_ls),
        depth=float(depth),
        semantic_2d=float(semantic_2d),
        explicit_depth=float(explicit_depth),
    )
    values = [report.cross_entropy, report.lovasz, report.depth,
              report.semantic_2d, report.explicit_depth]
    if not np.isfinite(values).all():
        raise ValueError("loss terms must be finite")
    return report
