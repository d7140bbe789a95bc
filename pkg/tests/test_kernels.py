"""Native (compiled) and pure NumPy kernels must agree bit-for-bit.

Both backends are imported directly so the comparison runs regardless
of which one the package selected at import time.
"""

from __future__ import annotations

import numpy as np
import pytest

import occkit._kernels as kernels
from occkit._kernels import _pure

_native = pytest.importorskip(
    "occkit._kernels._native", reason="compiled kernels not built"
)

from occkit.synth.primitives import PrimitiveSet, box_row, cylinder_row


def _prims() -> np.ndarray:
    rows = [
        box_row(4, (1.0, 2.0, 0.5), (1.0, 0.5, 0.5), 0.3),
        box_row(15, (-3.0, 0.0, 1.0), (0.5, 2.0, 1.0), -1.2),
        cylinder_row(16, (2.0, -2.0), 0.0, 3.0, 0.7),
        cylinder_row(15, (-1.0, -1.0), -0.5, 0.5, 1.5),
    ]
    return PrimitiveSet.build(rows).rows


def test_selected_backend_is_native():
    # the build step compiles the extension; the package must pick it up
    assert kernels.BACKEND == "native"


def test_trilinear_gather_backends_agree(rng):
    values = rng.normal(size=(5, 6, 7, 3))
    coords = rng.uniform(-2.0, 8.0, size=(500, 3))
    a = _native.trilinear_gather(values, coords)
    b = _pure.trilinear_gather(values, coords)
    assert a.dtype == b.dtype
    np.testing.assert_array_equal(a, b)


def test_trilinear_gather_float32_agree(rng):
    values = rng.normal(size=(4, 4, 4, 2)).astype(np.float32)
    coords = rng.uniform(-1.0, 5.0, size=(200, 3))
    np.testing.assert_array_equal(
        _native.trilinear_gather(values, coords),
        _pure.trilinear_gather(values, coords),
    )


def test_bilinear_gather_backends_agree(rng):
    values = rng.normal(size=(9, 11, 4))
    uv = rng.uniform(-3.0, 13.0, size=(500, 2))
    np.testing.assert_array_equal(
        _native.bilinear_gather(values, uv),
        _pure.bilinear_gather(values, uv),
    )


def test_raycast_backends_agree(rng):
    prims = _prims()
    origins = rng.normal(size=(300, 3)) * 2.0
    dirs = rng.normal(size=(300, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    t_a, i_a = _native.raycast(prims, origins, dirs, 50.0)
    t_b, i_b = _pure.raycast(prims, origins, dirs, 50.0)
    np.testing.assert_array_equal(i_a, i_b)
    np.testing.assert_array_equal(t_a, t_b)


def test_contains_backends_agree(rng):
    prims = _prims()
    points = rng.uniform(-5.0, 5.0, size=(2000, 3))
    np.testing.assert_array_equal(
        _native.contains(prims, points), _pure.contains(prims, points)
    )


def test_wrapper_casts_integer_volumes(rng):
    values = rng.integers(0, 10, size=(3, 3, 3, 1))
    coords = rng.uniform(0.0, 2.0, size=(10, 3))
    out = kernels.trilinear_gather(values, coords)
    assert out.dtype == np.float64


def test_pure_override_env(tmp_path, rng):
    # OCCKIT_PURE=1 must flip the selected backend in a fresh interpreter
    import subprocess
    import sys

    code = "import occkit._kernels as k; print(k.BACKEND)"
    out = subprocess.run(
        [sys.executable, "-c", code],
        capture_output=True,
        text=True,
        env={"OCCKIT_PURE": "1", "PATH": "/usr/bin:/bin"},
        cwd="/",
    )
    assert out.stdout.strip() == "pure"
