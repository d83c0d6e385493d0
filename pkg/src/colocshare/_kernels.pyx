# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled fixed-radius bipartite neighbour search on a uniform grid."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, floor, fabs
from libcpp.vector cimport vector

cnp.import_array()


cdef inline Py_ssize_t _cell(double v, double size, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t c = <Py_ssize_t>floor(v / size)
    if c < 0:
        return 0
    if c >= n:
        return n - 1
    return c


def disk_edges(double[::1] qx, double[::1] qy, double[::1] px, double[::1] py,
               double r, double width, double height, bint torus,
               Py_ssize_t nx, Py_ssize_t ny):
    """Return (query id, point id, distance) for every pair within ``r``.

    Points are bucketed into an ``nx`` by ``ny`` grid whose cells are at least
    ``r`` wide, so only the 3x3 block around each query cell is scanned.
    """
    cdef Py_ssize_t nq = qx.shape[0], npt = px.shape[0]
    cdef double cw = width / nx, ch = height / ny
    cdef Py_ssize_t ncell = nx * ny
    cdef cnp.ndarray[cnp.int64_t, ndim=1] start_arr = np.zeros(ncell + 1, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] order_arr = np.empty(npt, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] pcell_arr = np.empty(npt, dtype=np.int64)
    cdef cnp.int64_t[::1] start = start_arr
    cdef cnp.int64_t[::1] order = order_arr
    cdef cnp.int64_t[::1] pcell = pcell_arr
    cdef cnp.ndarray[cnp.int64_t, ndim=1] fill_arr
    cdef cnp.int64_t[::1] fill
    cdef vector[cnp.int64_t] out_q, out_p
    cdef vector[double] out_d
    cdef Py_ssize_t i, j, k, c, cx, cy, ox, oy, gx, gy, lo_x, hi_x, lo_y, hi_y
    cdef double dx, dy, d, r2 = r * r

    for j in range(npt):
        c = _cell(py[j], ch, ny) * nx + _cell(px[j], cw, nx)
        pcell[j] = c
        start[c + 1] += 1
    for c in range(ncell):
        start[c + 1] += start[c]
    fill_arr = start_arr[:ncell].copy()
    fill = fill_arr
    for j in range(npt):
        c = pcell[j]
        order[fill[c]] = j
        fill[c] += 1

    # with fewer than three cells on an axis, -1 and +1 would alias under wrapping
    if torus and nx < 3:
        lo_x, hi_x = 0, nx - 1
    else:
        lo_x, hi_x = -1, 1
    if torus and ny < 3:
        lo_y, hi_y = 0, ny - 1
    else:
        lo_y, hi_y = -1, 1

    with nogil:
        for i in range(nq):
            cx = _cell(qx[i], cw, nx)
            cy = _cell(qy[i], ch, ny)
            for oy in range(lo_y, hi_y + 1):
                gy = cy + oy
                if torus:
                    gy = (gy + ny) % ny
                elif gy < 0 or gy >= ny:
                    continue
                for ox in range(lo_x, hi_x + 1):
                    gx = cx + ox
                    if torus:
                        gx = (gx + nx) % nx
                    elif gx < 0 or gx >= nx:
                        continue
                    c = gy * nx + gx
                    for k in range(start[c], start[c + 1]):
                        j = order[k]
                        dx = fabs(qx[i] - px[j])
                        dy = fabs(qy[i] - py[j])
                        if torus:
                            if dx > width - dx:
                                dx = width - dx
                            if dy > height - dy:
                                dy = height - dy
                        d = dx * dx + dy * dy
                        if d <= r2:
                            out_q.push_back(i)
                            out_p.push_back(j)
                            out_d.push_back(sqrt(d))

    cdef Py_ssize_t m = out_q.size()
    qi = np.empty(m, dtype=np.int64)
    pj = np.empty(m, dtype=np.int64)
    dist = np.empty(m, dtype=np.float64)
    cdef cnp.int64_t[::1] qi_v = qi
    cdef cnp.int64_t[::1] pj_v = pj
    cdef double[::1] d_v = dist
    for k in range(m):
        qi_v[k] = out_q[k]
        pj_v[k] = out_p[k]
        d_v[k] = out_d[k]
    return qi, pj, dist
