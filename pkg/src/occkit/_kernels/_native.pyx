# Native implementations of the hot kernels.  Mirrors _pure.py: same
# arithmetic and operation order, so float64 results are bit-identical.
# Compiled without -ffast-math on purpose; IEEE semantics are part of the
# backend contract.

import numpy as np

cimport cython
cimport numpy as cnp
from libc.math cimport INFINITY, cos, fabs, floor, sin, sqrt

cnp.import_array()

ctypedef fused value_t:
    float
    double

DEF EPS_T = 1e-9


def trilinear_gather(value_t[:, :, :, ::1] values, double[:, ::1] coords):
    cdef Py_ssize_t d = values.shape[0]
    cdef Py_ssize_t h = values.shape[1]
    cdef Py_ssize_t w = values.shape[2]
    cdef Py_ssize_t c = values.shape[3]
    cdef Py_ssize_t n = coords.shape[0]

    out_np = np.zeros((n, c), dtype=np.asarray(values).dtype)
    cdef value_t[:, ::1] out = out_np
    cdef Py_ssize_t i, k, iz, iy, ix, zz, yy, xx
    cdef int dz, dy, dx
    cdef double z, y, x, fz, fy, fx, wz, wy, wx, wgt, acc

    for i in range(n):
        z = coords[i, 0]
        y = coords[i, 1]
        x = coords[i, 2]
        iz = <Py_ssize_t>floor(z)
        iy = <Py_ssize_t>floor(y)
        ix = <Py_ssize_t>floor(x)
        fz = z - floor(z)
        fy = y - floor(y)
        fx = x - floor(x)
        for k in range(c):
            acc = 0.0
            for dz in range(2):
                wz = fz if dz else 1.0 - fz
                zz = iz + dz
                if zz < 0 or zz >= d:
                    continue
                for dy in range(2):
                    wy = fy if dy else 1.0 - fy
                    yy = iy + dy
                    if yy < 0 or yy >= h:
                        continue
                    for dx in range(2):
                        wx = fx if dx else 1.0 - fx
                        xx = ix + dx
                        if xx < 0 or xx >= w:
                            continue
                        wgt = wz * wy * wx
                        acc = acc + wgt * <double>values[zz, yy, xx, k]
            out[i, k] = <value_t>acc
    return out_np


def bilinear_gather(value_t[:, :, ::1] values, double[:, ::1] uv):
    cdef Py_ssize_t h = values.shape[0]
    cdef Py_ssize_t w = values.shape[1]
    cdef Py_ssize_t c = values.shape[2]
    cdef Py_ssize_t n = uv.shape[0]

    out_np = np.zeros((n, c), dtype=np.asarray(values).dtype)
    cdef value_t[:, ::1] out = out_np
    cdef Py_ssize_t i, k, iu, iv, uu, vv
    cdef int du, dv
    cdef double u, v, fu, fv, wu, wv, acc

    for i in range(n):
        u = uv[i, 0]
        v = uv[i, 1]
        iu = <Py_ssize_t>floor(u)
        iv = <Py_ssize_t>floor(v)
        fu = u - floor(u)
        fv = v - floor(v)
        for k in range(c):
            acc = 0.0
            for dv in range(2):
                wv = fv if dv else 1.0 - fv
                vv = iv + dv
                if vv < 0 or vv >= h:
                    continue
                for du in range(2):
                    wu = fu if du else 1.0 - fu
                    uu = iu + du
                    if uu < 0 or uu >= w:
                        continue
                    acc = acc + (wv * wu) * <double>values[vv, uu, k]
            out[i, k] = <value_t>acc
    return out_np


cdef inline double _box_ray_one(const double* p, double ox, double oy,
                                double oz, double dx, double dy,
                                double dz) nogil:
    cdef double cx = p[2], cy = p[3], cz = p[4]
    cdef double hx = p[5], hy = p[6], hz = p[7], yaw = p[8]
    cdef double cs = cos(yaw), sn = sin(yaw)
    cdef double pox = ox - cx, poy = oy - cy
    cdef double o[3]
    cdef double dvec[3]
    cdef double half[3]
    o[0] = cs * pox + sn * poy
    o[1] = -sn * pox + cs * poy
    o[2] = oz - cz
    dvec[0] = cs * dx + sn * dy
    dvec[1] = -sn * dx + cs * dy
    dvec[2] = dz
    half[0] = hx
    half[1] = hy
    half[2] = hz

    cdef double t0 = -INFINITY, t1 = INFINITY
    cdef double ta, tb, lo, hi
    cdef int ax
    for ax in range(3):
        if dvec[ax] == 0.0:
            if fabs(o[ax]) > half[ax]:
                return INFINITY
            continue
        ta = (-half[ax] - o[ax]) / dvec[ax]
        tb = (half[ax] - o[ax]) / dvec[ax]
        lo = ta if ta < tb else tb
        hi = tb if ta < tb else ta
        if lo > t0:
            t0 = lo
        if hi < t1:
            t1 = hi
    if t1 >= t0 and t0 > EPS_T:
        return t0
    return INFINITY


cdef inline double _cylinder_ray_one(const double* p, double ox, double oy,
                                     double oz, double dx, double dy,
                                     double dz) nogil:
    cdef double cx = p[2], cy = p[3], z0 = p[4], z1 = p[5], r = p[6]
    cdef double pox = ox - cx, poy = oy - cy
    cdef double a = dx * dx + dy * dy
    cdef double b = 2.0 * (pox * dx + poy * dy)
    cdef double c0 = pox * pox + poy * poy - r * r
    cdef double disc = b * b - 4.0 * a * c0
    cdef double best = INFINITY
    cdef double sq, t, z, px, py
    cdef int s

    if disc >= 0.0 and a > 0.0:
        sq = sqrt(disc)
        for s in range(2):
            t = (-b - sq) / (2.0 * a) if s == 0 else (-b + sq) / (2.0 * a)
            z = oz + t * dz
            if t > EPS_T and z >= z0 and z <= z1 and t < best:
                best = t
    if dz != 0.0:
        for s in range(2):
            t = ((z0 if s == 0 else z1) - oz) / dz
            px = pox + t * dx
            py = poy + t * dy
            if t > EPS_T and px * px + py * py <= r * r and t < best:
                best = t
    return best


def raycast(double[:, ::1] prims, double[:, ::1] origins,
            double[:, ::1] dirs, double t_max):
    cdef Py_ssize_t n = origins.shape[0]
    cdef Py_ssize_t m = prims.shape[0]
    t_np = np.full(n, np.inf)
    i_np = np.full(n, -1, dtype=np.int32)
    cdef double[::1] best_t = t_np
    cdef cnp.int32_t[::1] best_i = i_np
    cdef Py_ssize_t i, j
    cdef double t

    with nogil:
        for i in range(n):
            for j in range(m):
                if <int>prims[j, 0] == 0:
                    t = _box_ray_one(&prims[j, 0], origins[i, 0],
                                     origins[i, 1], origins[i, 2],
                                     dirs[i, 0], dirs[i, 1], dirs[i, 2])
                else:
                    t = _cylinder_ray_one(&prims[j, 0], origins[i, 0],
                                          origins[i, 1], origins[i, 2],
                                          dirs[i, 0], dirs[i, 1], dirs[i, 2])
                if t < best_t[i] and t <= t_max:
                    best_t[i] = t
                    best_i[i] = <cnp.int32_t>j
    return t_np, i_np


def contains(double[:, ::1] prims, double[:, ::1] points):
    cdef Py_ssize_t n = points.shape[0]
    cdef Py_ssize_t m = prims.shape[0]
    out_np = np.full(n, -1, dtype=np.int32)
    cdef cnp.int32_t[::1] out = out_np
    cdef Py_ssize_t i, j
    cdef double px, py, pz, cs, sn, rx, ry, lx, ly, lz
    cdef int inside

    with nogil:
        for i in range(n):
            px = points[i, 0]
            py = points[i, 1]
            pz = points[i, 2]
            for j in range(m):
                if <int>prims[j, 0] == 0:
                    cs = cos(prims[j, 8])
                    sn = sin(prims[j, 8])
                    rx = px - prims[j, 2]
                    ry = py - prims[j, 3]
                    lx = cs * rx + sn * ry
                    ly = -sn * rx + cs * ry
                    lz = pz - prims[j, 4]
                    inside = (fabs(lx) <= prims[j, 5] and
                              fabs(ly) <= prims[j, 6] and
                              fabs(lz) <= prims[j, 7])
                else:
                    rx = px - prims[j, 2]
                    ry = py - prims[j, 3]
                    inside = (rx * rx + ry * ry <= prims[j, 6] * prims[j, 6]
                              and pz >= prims[j, 4] and pz <= prims[j, 5])
                if inside:
                    out[i] = <cnp.int32_t>j
                    break
    return out_np
