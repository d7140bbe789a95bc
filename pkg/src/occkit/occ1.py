"""OCC1 sparse occupancy container.

Little-endian layout:

    offset  size  field
    0       4     magic "OCC1"
    4       2     version (u16, currently 1)
    6       6     dims D, H, W (u16 each)
    12      4     voxel_size (f32)
    16      12    origin x, y, z (f32 each)
    28      8     record count (u64)
    36      7n    records: z u16, y u16, x u16, label u8

Records are strictly ascending in (z,y,x) and never carry the empty
label.  Metric header fields are stored as f32, so writing a spec whose
values are not f32-representable quantizes them once; a second
write-read cycle is byte-stable.
"""

from __future__ import annotations

import struct

import numpy as np

from .grid import EMPTY_ID, GridSpec, N_LABELS, SparseOccupancy

MAGIC = b"OCC1"
VERSION = 1

_HEADER = struct.Struct("<4sH3Hf3fQ")
_HEADER_SIZE = _HEADER.size  # 36
_RECORD_SIZE = 7

assert _HEADER_SIZE == 36


class Occ1Error(ValueError):
    """Base class for OCC1 parse and encode failures."""


class Occ1MagicError(Occ1Error):
    pass


class Occ1VersionError(Occ1Error):
    pass


class Occ1TruncatedError(Occ1Error):
    pass


class Occ1OrderError(Occ1Error):
    pass


class Occ1RangeError(Occ1Error):
    pass


class Occ1LabelError(Occ1Error):
    pass


def occ1_write(grid: SparseOccupancy) -> bytes:
    """Serialize; the SparseOccupancy invariants guarantee sorted,
    unique, in-bounds, non-empty records."""
    d, h, w = grid.spec.dims
    if max(d, h, w) > 0xFFFF:
        raise Occ1RangeError("dims exceed u16 range")
    ox, oy, oz = grid.spec.origin
    n = grid.indices.shape[0]
    header = _HEADER.pack(
        MAGIC, VERSION, d, h, w, grid.spec.voxel_size, ox, oy, oz, n
    )
    if n == 0:
        return header
    rec = np.empty((n, _RECORD_SIZE), dtype=np.uint8)
    # the byte-reinterpret view needs a contiguous last axis, which the
    # indices (often a column slice of the records table) may lack
    idx = grid.indices.astype("<u2", order="C")
    rec[:, 0:6] = idx.view(np.uint8).reshape(n, 6)
    rec[:, 6] = grid.labels
    return header + rec.tobytes()


def occ1_read(data: bytes) -> SparseOccupancy:
    """Parse and validate every invariant, with a distinct error per
    failure mode."""
    if len(data) < _HEADER_SIZE:
        raise Occ1TruncatedError(
            f"payload is {len(data)} bytes, header needs {_HEADER_SIZE}"
        )
    magic, version, d, h, w, vs, ox, oy, oz, n = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise Occ1MagicError(f"bad magic {magic!r}")
    if version != VERSION:
        raise Occ1VersionError(f"unsupported version {version}")
    if min(d, h, w) == 0 or not (vs > 0) or not np.isfinite(vs):
        raise Occ1RangeError("header declares an invalid grid")
    expected = _HEADER_SIZE + _RECORD_SIZE * n
    if len(data) != expected:
        raise Occ1TruncatedError(
            f"payload is {len(data)} bytes, expected {expected} for {n} records"
        )
    spec = GridSpec(
        origin=(float(ox), float(oy), float(oz)),
        voxel_size=float(vs),
        dims=(d, h, w),
    )
    if n == 0:
        return SparseOccupancy(spec, np.zeros((0, 4), dtype=np.int64))
    raw = np.frombuffer(data, dtype=np.uint8, offset=_HEADER_SIZE).reshape(
        n, _RECORD_SIZE
    )
    indices = (
        raw[:, 0:6].reshape(-1).view("<u2").reshape(n, 3).astype(np.int64)
    )
    labels = raw[:, 6].astype(np.int64)
    if (indices[:, 0] >= d).any() or (indices[:, 1] >= h).any() or (
        indices[:, 2] >= w
    ).any():
        raise Occ1RangeError("record index outside the declared dims")
    if (labels >= N_LABELS).any() or (labels == EMPTY_ID).any():
        raise Occ1LabelError("record label invalid or empty")
    flat = (indices[:, 0] * h + indices[:, 1]) * w + indices[:, 2]
    if n > 1 and not (np.diff(flat) > 0).all():
        raise Occ1OrderError("records not strictly ascending")
    return SparseOccupancy(spec, np.concatenate([indices, labels[:, None]], axis=1))


def occ1_write_file(grid: SparseOccupancy, path) -> None:
    with open(path, "wb") as fh:
        fh.write(occ1_write(grid))


def occ1_read_file(path) -> SparseOccupancy:
    with open(path, "rb") as fh:
        return occ1_read(fh.read())
