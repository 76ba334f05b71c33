# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-node kernels. Same contracts as ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, atan2, cos, sin

cnp.import_array()


cdef inline void _esym_row(const double* x, Py_ssize_t skip, double* e, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i, m, count = 0
    e[0] = 1.0
    for m in range(1, n + 1):
        e[m] = 0.0
    for i in range(n):
        if i == skip:
            continue
        count += 1
        for m in range(count, 0, -1):
            e[m] += x[i] * e[m - 1]


def esym(x):
    cdef double[:, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t rows = xv.shape[0], n = xv.shape[1], r
    out = np.zeros((rows, n + 1))
    cdef double[:, ::1] ov = out
    with nogil:
        for r in range(rows):
            _esym_row(&xv[r, 0], -1, &ov[r, 0], n)
    return out


def esym_grad(x, int m):
    cdef double[:, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t rows = xv.shape[0], n = xv.shape[1], r, i
    out = np.zeros((rows, n))
    if m < 1 or m > n:
        return out
    cdef double[:, ::1] ov = out
    cdef double[::1] work = np.zeros(n + 1)
    with nogil:
        for r in range(rows):
            for i in range(n):
                _esym_row(&xv[r, 0], i, &work[0], n)
                ov[r, i] = work[m - 1]
    return out


def pencil_eig(h, g):
    h = np.ascontiguousarray(h, dtype=np.float64)
    g = np.ascontiguousarray(g, dtype=np.float64)
    cdef Py_ssize_t n = g.shape[1]
    if n > 2:
        from ._pykernels import pencil_eig as fallback
        return fallback(h, g)
    cdef double[:, :, ::1] hv = h
    cdef double[:, :, ::1] gv = g
    cdef Py_ssize_t rows = gv.shape[0], r
    kappa = np.empty((rows, n))
    w = np.zeros((rows, n, n))
    cdef double[:, ::1] kv = kappa
    cdef double[:, :, ::1] wv = w
    cdef double l11, l21, l22, i11, i21, i22, p, q, s, mean, d, th, c0, s0
    cdef double a00, a01, a11
    cdef bint bad = 0
    with nogil:
        for r in range(rows):
            if n == 1:
                if gv[r, 0, 0] <= 0.0:
                    bad = 1
                    break
                kv[r, 0] = hv[r, 0, 0] / gv[r, 0, 0]
                wv[r, 0, 0] = 1.0 / sqrt(gv[r, 0, 0])
                continue
            if gv[r, 0, 0] <= 0.0:
                bad = 1
                break
            l11 = sqrt(gv[r, 0, 0])
            l21 = gv[r, 1, 0] / l11
            l22 = gv[r, 1, 1] - l21 * l21
            if l22 <= 0.0:
                bad = 1
                break
            l22 = sqrt(l22)
            i11 = 1.0 / l11
            i22 = 1.0 / l22
            i21 = -l21 * i11 * i22
            # A = Linv h Linv^T with Linv = [[i11, 0], [i21, i22]]
            a00 = i11 * i11 * hv[r, 0, 0]
            a01 = i11 * (i21 * hv[r, 0, 0] + i22 * 0.5 * (hv[r, 0, 1] + hv[r, 1, 0]))
            a11 = (i21 * i21 * hv[r, 0, 0]
                   + i21 * i22 * (hv[r, 0, 1] + hv[r, 1, 0])
                   + i22 * i22 * hv[r, 1, 1])
            p = a00
            q = a01
            s = a11
            mean = 0.5 * (p + s)
            d = sqrt(0.25 * (p - s) * (p - s) + q * q)
            kv[r, 0] = mean - d
            kv[r, 1] = mean + d
            th = 0.5 * atan2(2.0 * q, p - s)
            c0 = cos(th)
            s0 = sin(th)
            # Q columns: smaller (-s0, c0), larger (c0, s0); W = Linv^T Q
            wv[r, 0, 0] = i11 * (-s0) + i21 * c0
            wv[r, 1, 0] = i22 * c0
            wv[r, 0, 1] = i11 * c0 + i21 * s0
            wv[r, 1, 1] = i22 * s0
    if bad:
        raise np.linalg.LinAlgError("metric is not positive definite")
    return kappa, w
