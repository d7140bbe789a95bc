"""Pure NumPy implementations of the hot kernels.

The native Cython module mirrors these exactly (same arithmetic, same
operation order) so the two backends agree bit-for-bit on float64 inputs.
All interpolation kernels use zero padding outside the sampled array and
place stored values at integer coordinates (node = voxel/pixel center).

Primitive packing (one row per solid, float64, 9 columns):
    [kind, label, p0..p6]
    kind 0 box:      p = cx, cy, cz, hx, hy, hz, yaw
    kind 1 cylinder: p = cx, cy, z0, z1, radius, unused, unused
Boxes are axis-aligned then rotated by ``yaw`` about +Z; cylinders are
vertical with flat caps.  Containment uses closed comparisons.
"""

from __future__ import annotations

import numpy as np

_EPS_T = 1e-9

KIND_BOX = 0
KIND_CYLINDER = 1


def trilinear_gather(values: np.ndarray, coords: np.ndarray) -> np.ndarray:
    """Sample ``values`` (D,H,W,C) at continuous (z,y,x) node coordinates.

    Returns (N,C).  Accumulation runs in float64 and is cast back to the
    value dtype once, so float32 volumes sample identically on both
    backends.
    """
    d, h, w, c = values.shape
    z = coords[:, 0]
    y = coords[:, 1]
    x = coords[:, 2]
    z0 = np.floor(z)
    y0 = np.floor(y)
    x0 = np.floor(x)
    fz = z - z0
    fy = y - y0
    fx = x - x0
    iz = z0.astype(np.int64)
    iy = y0.astype(np.int64)
    ix = x0.astype(np.int64)

    out = np.zeros((coords.shape[0], c), dtype=np.float64)
    for dz in (0, 1):
        wz = fz if dz else 1.0 - fz
        zz = iz + dz
        mz = (zz >= 0) & (zz < d)
        for dy in (0, 1):
            wy = fy if dy else 1.0 - fy
            yy = iy + dy
            my = mz & (yy >= 0) & (yy < h)
            for dx in (0, 1):
                wx = fx if dx else 1.0 - fx
                xx = ix + dx
                m = my & (xx >= 0) & (xx < w)
                wgt = (wz * wy * wx) * m
                vals = values[
                    np.clip(zz, 0, d - 1),
                    np.clip(yy, 0, h - 1),
                    np.clip(xx, 0, w - 1),
                ].astype(np.float64, copy=False)
                out += wgt[:, None] * vals
    return out.astype(values.dtype, copy=False)


def bilinear_gather(values: np.ndarray, uv: np.ndarray) -> np.ndarray:
    """Sample ``values`` (H,W,C) at continuous (u,v) pixel coordinates.

    u indexes columns (x), v indexes rows (y); pixel centers sit at
    integer coordinates.  Returns (N,C) with zero padding outside.
    """
    h, w, c = values.shape
    u = uv[:, 0]
    v = uv[:, 1]
    u0 = np.floor(u)
    v0 = np.floor(v)
    fu = u - u0
    fv = v - v0
    iu = u0.astype(np.int64)
    iv = v0.astype(np.int64)

    out = np.zeros((uv.shape[0], c), dtype=np.float64)
    for dv in (0, 1):
        wv = fv if dv else 1.0 - fv
        vv = iv + dv
        mv = (vv >= 0) & (vv < h)
        for du in (0, 1):
            wu = fu if du else 1.0 - fu
            uu = iu + du
            m = mv & (uu >= 0) & (uu < w)
            wgt = (wv * wu) * m
            vals = values[
                np.clip(vv, 0, h - 1),
                np.clip(uu, 0, w - 1),
            ].astype(np.float64, copy=False)
            out += wgt[:, None] * vals
    return out.astype(values.dtype, copy=False)


def _box_ray(prim, ox, oy, oz, dx, dy, dz):
    cx, cy, cz, hx, hy, hz, yaw = prim[2:9]
    cs = np.cos(yaw)
    sn = np.sin(yaw)
    pox = ox - cx
    poy = oy - cy
    lox = cs * pox + sn * poy
    loy = -sn * pox + cs * poy
    loz = oz - cz
    ldx = cs * dx + sn * dy
    ldy = -sn * dx + cs * dy
    ldz = dz

    t0 = np.full_like(ox, -np.inf)
    t1 = np.full_like(ox, np.inf)
    ok = np.ones(ox.shape, dtype=bool)
    for o, d, half in ((lox, ldx, hx), (loy, ldy, hy), (loz, ldz, hz)):
        zero = d == 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            ta = (-half - o) / d
            tb = (half - o) / d
        lo = np.minimum(ta, tb)
        hi = np.maximum(ta, tb)
        lo = np.where(zero, -np.inf, lo)
        hi = np.where(zero, np.inf, hi)
        ok &= ~(zero & (np.abs(o) > half))
        t0 = np.maximum(t0, lo)
        t1 = np.minimum(t1, hi)
    hit = ok & (t1 >= t0) & (t0 > _EPS_T)
    return np.where(hit, t0, np.inf)


def _cylinder_ray(prim, ox, oy, oz, dx, dy, dz):
    cx, cy, z0, z1, r = prim[2:7]
    pox = ox - cx
    poy = oy - cy
    a = dx * dx + dy * dy
    b = 2.0 * (pox * dx + poy * dy)
    c0 = pox * pox + poy * poy - r * r
    disc = b * b - 4.0 * a * c0
    best = np.full(ox.shape, np.inf)

    valid = (disc >= 0.0) & (a > 0.0)
    sq = np.sqrt(np.where(valid, disc, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        for sign in (-1.0, 1.0):
            t = (-b + sign * sq) / (2.0 * a)
            z = oz + t * dz
            ok = valid & (t > _EPS_T) & (z >= z0) & (z <= z1)
            best = np.where(ok & (t < best), t, best)
        for zc in (z0, z1):
            t = (zc - oz) / dz
            px = pox + t * dx
            py = poy + t * dy
            ok = (dz != 0.0) & (t > _EPS_T) & (px * px + py * py <= r * r)
            best = np.where(ok & (t < best), t, best)
    return best


def raycast(
    prims: np.ndarray, origins: np.ndarray, dirs: np.ndarray, t_max: float
) -> tuple[np.ndarray, np.ndarray]:
    """Nearest intersection of each ray with the primitive set.

    Returns (t, index): hit distance (inf when nothing is hit before
    ``t_max``) and the row index of the hit primitive (-1 for misses).
    Ties in t keep the lowest primitive index.
    """
    n = origins.shape[0]
    best_t = np.full(n, np.inf)
    best_i = np.full(n, -1, dtype=np.int32)
    ox, oy, oz = origins[:, 0], origins[:, 1], origins[:, 2]
    dx, dy, dz = dirs[:, 0], dirs[:, 1], dirs[:, 2]
    for i in range(prims.shape[0]):
        prim = prims[i]
        if int(prim[0]) == KIND_BOX:
            t = _box_ray(prim, ox, oy, oz, dx, dy, dz)
        else:
            t = _cylinder_ray(prim, ox, oy, oz, dx, dy, dz)
        better = (t < best_t) & (t <= t_max)
        best_t[better] = t[better]
        best_i[better] = i
    return best_t, best_i


def contains(prims: np.ndarray, points: np.ndarray) -> np.ndarray:
    """First primitive (lowest row index) containing each point, else -1."""
    n = points.shape[0]
    out = np.full(n, -1, dtype=np.int32)
    px, py, pz = points[:, 0], points[:, 1], points[:, 2]
    for i in range(prims.shape[0]):
        prim = prims[i]
        unset = out < 0
        if not unset.any():
            break
        if int(prim[0]) == KIND_BOX:
            cx, cy, cz, hx, hy, hz, yaw = prim[2:9]
            cs = np.cos(yaw)
            sn = np.sin(yaw)
            rx = px - cx
            ry = py - cy
            lx = cs * rx + sn * ry
            ly = -sn * rx + cs * ry
            lz = pz - cz
            inside = (
                (np.abs(lx) <= hx) & (np.abs(ly) <= hy) & (np.abs(lz) <= hz)
            )
        else:
            cx, cy, z0, z1, r = prim[2:7]
            rx = px - cx
            ry = py - cy
            inside = (rx * rx + ry * ry <= r * r) & (pz >= z0) & (pz <= z1)
        out[unset & inside] = i
    return out
