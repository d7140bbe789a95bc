"""Compare the compiled kernel core against the pure NumPy fallback.

Run from the repo root:

    python3 benchmarks/bench_kernels.py

The backend is chosen when occkit._kernels imports, so this script
re-executes itself once per backend (OCCKIT_PURE=1 forces the
fallback) and prints a per-kernel timing table.  Each child also
reports a digest of its outputs; the parent checks the two backends
produced byte-identical results before trusting the times.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

KERNELS = ("trilinear_gather", "bilinear_gather", "raycast", "contains")


def _workloads():
    from occkit.synth import generate_scene

    rng = np.random.default_rng(0)
    volume = rng.normal(size=(40, 128, 128, 16))
    coords = rng.uniform([-1, -1, -1], [40, 128, 128], size=(500_000, 3))
    image = rng.normal(size=(240, 320, 18))
    uv = rng.uniform([-1, -1], [320, 240], size=(500_000, 2))
    prims = generate_scene(1).frame_primitives(0).rows
    dirs = rng.normal(size=(50_000, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    origins = np.zeros_like(dirs)
    origins[:, 2] = 1.8
    points = rng.uniform([-30, -30, 0], [30, 30, 4], size=(500_000, 3))

    from occkit import _kernels as k

    return {
        "trilinear_gather": lambda: k.trilinear_gather(volume, coords),
        "bilinear_gather": lambda: k.bilinear_gather(image, uv),
        "raycast": lambda: k.raycast(prims, origins, dirs, 60.0),
        "contains": lambda: k.contains(prims, points),
    }


def _digest(result) -> str:
    parts = result if isinstance(result, tuple) else (result,)
    h = hashlib.sha256()
    for part in parts:
        h.update(np.ascontiguousarray(part).tobytes())
    return h.hexdigest()[:16]


def _child(repeats: int) -> None:
    from occkit._kernels import BACKEND

    work = _workloads()
    times = {}
    digests = {}
    for name in KERNELS:
        fn = work[name]
        digests[name] = _digest(fn())  # warm-up run doubles as the digest
        best = float("inf")
        for _ in range(repeats):
            t0 = time.perf_counter()
            fn()
            best = min(best, time.perf_counter() - t0)
        times[name] = best
    print(json.dumps({"backend": BACKEND, "times": times, "digests": digests}))


def _run_backend(pure: bool, repeats: int) -> dict:
    env = dict(os.environ, OCCKIT_PURE="1" if pure else "0")
    out = subprocess.run(
        [sys.executable, __file__, "--child", "--repeats", str(repeats)],
        env=env,
        capture_output=True,
        text=True,
        check=True,
    )
    return json.loads(out.stdout.strip().splitlines()[-1])


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--child", action="store_true", help=argparse.SUPPRESS)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()
    if args.child:
        _child(args.repeats)
        return

    native = _run_backend(pure=False, repeats=args.repeats)
    pure = _run_backend(pure=True, repeats=args.repeats)
    if native["backend"] != "native":
        print("compiled core unavailable; both runs used the fallback")
    for name in KERNELS:
        if native["digests"][name] != pure["digests"][name]:
            raise SystemExit(f"backends disagree on {name}; timings meaningless")

    print(f"{'kernel':<18} {'native (ms)':>12} {'pure (ms)':>12} {'speedup':>8}")
    for name in KERNELS:
        tn = native["times"][name] * 1e3
        tp = pure["times"][name] * 1e3
        print(f"{name:<18} {tn:>12.2f} {tp:>12.2f} {tp / tn:>7.1f}x")


if __name__ == "__main__":
    main()
