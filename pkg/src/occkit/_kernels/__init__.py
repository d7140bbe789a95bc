"""Kernel backend selection.

The compiled Cython core (`occkit._kernels._native`) is used when it
imported cleanly; otherwise the pure NumPy fallback takes over.  Set
``OCCKIT_PURE=1`` to force the fallback (useful for benchmarking and for
environments without a compiler).  Both backends implement the same
contract and agree bit-for-bit on float64 inputs.
"""

from __future__ import annotations

import os

import numpy as np

from . import _pure

KIND_BOX = _pure.KIND_BOX
KIND_CYLINDER = _pure.KIND_CYLINDER

if os.environ.get("OCCKIT_PURE", "") not in ("", "0"):
    _impl = _pure
    BACKEND = "pure"
else:
    try:
        from . import _native as _impl  # type: ignore[no-redef]

        BACKEND = "native"
    except ImportError:
        _impl = _pure
        BACKEND = "pure"


def _contig(a: np.ndarray, dtype=None) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=dtype)


def trilinear_gather(values: np.ndarray, coords: np.ndarray) -> np.ndarray:
    """(N,C) samples of a (D,H,W,C) volume at (z,y,x) node coordinates."""
    if values.dtype not in (np.float32, np.float64):
        values = values.astype(np.float64)
    return _impl.trilinear_gather(_contig(values), _contig(coords, np.float64))


def bilinear_gather(values: np.ndarray, uv: np.ndarray) -> np.ndarray:
    """(N,C) samples of a (H,W,C) image at (u,v) pixel coordinates."""
    if values.dtype not in (np.float32, np.float64):
        values = values.astype(np.float64)
    return _impl.bilinear_gather(_contig(values), _contig(uv, np.float64))


def raycast(prims, origins, dirs, t_max: float):
    """Per-ray nearest primitive hit: (t, primitive_index)."""
    return _impl.raycast(
        _contig(prims, np.float64),
        _contig(origins, np.float64),
        _contig(dirs, np.float64),
        float(t_max),
    )


def contains(prims, points):
    """Index of the first primitive containing each point (-1 outside all)."""
    return _impl.contains(
        _contig(prims, np.float64), _contig(points, np.float64)
    )
