"""Fit the shipped head and fine-fusion matrices on held-out scenes.

Run from the repo root:

    python3 tools/fit_configs.py

Writes src/occkit/configs/head_{modality}.json and
conet_{modality}.json for camera, lidar, and multimodal.  Fitting is a
class-balanced ridge regression from the fixed-weight feature pipeline
onto synthetic ground truth; the scenes used here (seeds 9001..9003)
are never used in tests.  The noise row of every classifier is pinned
(zero weights, large negative bias) so predictions cannot emit the
ignore class.
"""

from __future__ import annotations

import json
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from occkit.conet import (  # noqa: E402
    extract_occupied,
    image_feature_maps,
    sample_geometric,
    sample_semantic,
    split_voxels,
)
from occkit.grid import EMPTY_ID, GridSpec, N_LABELS, NOISE_ID  # noqa: E402
from occkit.network import (  # noqa: E402
    EncoderConfig,
    HeadConfig,
    decode_and_head,
    decoder_features,
    encode_features,
)
from occkit.rng import SplitMix64  # noqa: E402
from occkit.synth import (  # noqa: E402
    SceneConfig,
    build_frame_sensor_data,
    generate_scene,
    ground_truth_occupancy,
)

FIT_SEEDS = (9001, 9002, 9003)
FIT_FRAMES = (0, 2, 4)
STRIDE = 4
ETA = 4
MODALITIES = ("camera", "lidar", "multimodal")
MAX_OCCUPIED_PER_FRAME = 8000
NOISE_PIN_BIAS = -50.0

CONFIG_DIR = Path(__file__).resolve().parent.parent / "src" / "occkit" / "configs"


def pooled_coarse_gt(gt_fine: np.ndarray, stride: int) -> np.ndarray:
    """Coarse labels: modal non-empty fine label per block, empty when
    the whole block is empty."""
    d, h, w = gt_fine.shape
    dc, hc, wc = d // stride, h // stride, w // stride
    blocks = gt_fine.reshape(dc, stride, hc, stride, wc, stride)
    counts = np.zeros((N_LABELS, dc, hc, wc), dtype=np.int32)
    for c in range(N_LABELS):
        counts[c] = (blocks == c).sum(axis=(1, 3, 5))
    occupied = counts.copy()
    occupied[EMPTY_ID] = 0
    best = occupied.argmax(axis=0).astype(np.uint8)
    any_occ = occupied.sum(axis=0) > 0
    return np.where(any_occ, best, EMPTY_ID).astype(np.uint8)


def class_weights(labels: np.ndarray) -> np.ndarray:
    counts = np.bincount(labels, minlength=N_LABELS).astype(np.float64)
    w = np.zeros(N_LABELS)
    present = counts > 0
    w[present] = 1.0 / counts[present]
    w /= w[present].mean()
    return w[labels]


class RidgeAccumulator:
    """Streaming weighted least squares onto one-hot targets."""

    def __init__(self, n_features: int):
        self.n = n_features + 1  # bias column
        self.xtx = np.zeros((self.n, self.n))
        self.xty = np.zeros((self.n, N_LABELS))

    def add(self, x: np.ndarray, labels: np.ndarray) -> None:
        w = class_weights(labels)
        xa = np.concatenate([x, np.ones((x.shape[0], 1))], axis=1)
        xw = xa * w[:, None]
        self.xtx += xw.T @ xa
        y = np.zeros((x.shape[0], N_LABELS))
        y[np.arange(x.shape[0]), labels] = 1.0
        self.xty += xw.T @ y

    def solve(
        self, rel_lambda: float = 1e-6, pin: tuple[int, ...] = (NOISE_ID,)
    ) -> tuple[np.ndarray, np.ndarray]:
        lam = rel_lambda * np.trace(self.xtx) / self.n
        sol = np.linalg.solve(self.xtx + lam * np.eye(self.n), self.xty)
        weights = sol[:-1].T.copy()  # (18, n_features)
        bias = sol[-1].copy()  # (18,)
        for label in pin:
            weights[label] = 0.0
            bias[label] = NOISE_PIN_BIAS
        return weights, bias


def main() -> None:
    spec = GridSpec.standard()
    cfg = EncoderConfig(stride=STRIDE)
    coarse_spec = cfg.coarse_spec(spec)
    CONFIG_DIR.mkdir(exist_ok=True)

    print("preparing fit data", flush=True)
    data = []  # (scene, frame_index, frame, gt_fine, gt_coarse)
    for seed in FIT_SEEDS:
        scene = generate_scene(seed, SceneConfig())
        for t in FIT_FRAMES:
            t0 = time.time()
            frame = build_frame_sensor_data(scene, t)
            gt_fine = ground_truth_occupancy(scene, t, spec).labels
            gt_coarse = pooled_coarse_gt(gt_fine, STRIDE)
            data.append((scene, t, frame, gt_fine, gt_coarse))
            print(f"  seed {seed} frame {t}: {time.time()-t0:.1f}s", flush=True)

    for modality in MODALITIES:
        print(f"fitting head [{modality}]", flush=True)
        head_acc = RidgeAccumulator(cfg.decoder_channels)
        feats = {}
        for scene, t, frame, gt_fine, gt_coarse in data:
            fv = encode_features(frame, modality, cfg, spec)
            feats[(scene.seed, t)] = fv
            x = decoder_features(fv, cfg).reshape(-1, cfg.decoder_channels)
            head_acc.add(x, gt_coarse.reshape(-1).astype(np.int64))
        weights, bias = head_acc.solve()
        head = HeadConfig(cfg.decoder_channels, weights, bias,
                          provenance="fitted: ridge on held-out synthetic scenes")
        path = CONFIG_DIR / f"head_{modality}.json"
        path.write_text(json.dumps(head.to_json_obj()) + "\n")
        print(f"  wrote {path}", flush=True)

        print(f"fitting fine fusion [{modality}]", flush=True)
        rng = SplitMix64(0xF17)
        fine_acc = RidgeAccumulator(N_LABELS + cfg.channels)
        for scene, t, frame, gt_fine, gt_coarse in data:
            fv = feats[(scene.seed, t)]
            probs = decode_and_head(fv, cfg, head)
            v_o = extract_occupied(probs)
            if v_o.shape[0] > MAX_OCCUPIED_PER_FRAME:
                pick = np.sort(
                    np.array(
                        [rng.randint(0, v_o.shape[0] - 1)
                         for _ in range(MAX_OCCUPIED_PER_FRAME)],
                        dtype=np.int64,
                    )
                )
                v_o = v_o[pick]
            queries = split_voxels(v_o, ETA, coarse_spec, STRIDE)
            if modality == "lidar":
                fs = np.zeros((len(queries), N_LABELS))
            else:
                fs = sample_semantic(queries, image_feature_maps(frame),
                                     frame.cameras)
            fg = sample_geometric(queries, fv)
            x = np.concatenate([fs, fg], axis=1)
            fi = queries.fine_indices
            y = gt_fine[fi[:, 0], fi[:, 1], fi[:, 2]].astype(np.int64)
            # fit only where a real class exists; queries over empty
            # ground truth are wrong whatever class they get, and fitting
            # them would just blur the class boundaries
            keep = y != EMPTY_ID
            if keep.any():
                fine_acc.add(x[keep], y[keep])
        # the coarse stage owns occupancy support: refinement reassigns
        # classes within it and never emits empty (or noise) itself
        out_w, out_b = fine_acc.solve(pin=(NOISE_ID, EMPTY_ID))
        c_h = N_LABELS + cfg.channels
        sem_w = np.zeros((c_h, N_LABELS))
        sem_w[:N_LABELS, :] = np.eye(N_LABELS)
        geo_w = np.zeros((c_h, cfg.channels))
        geo_w[N_LABELS:, :] = np.eye(cfg.channels)
        obj = {
            "c_s": N_LABELS,
            "c_g": cfg.channels,
            "c_h": c_h,
            "sem": {"weights": sem_w.tolist(), "bias": [0.0] * c_h},
            "geo": {"weights": geo_w.tolist(), "bias": [0.0] * c_h},
            "out": {"weights": out_w.tolist(), "bias": out_b.tolist()},
        }
        path = CONFIG_DIR / f"conet_{modality}.json"
        path.write_text(json.dumps(obj) + "\n")
        print(f"  wrote {path}", flush=True)


if __name__ == "__main__":
    main()
