# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels. Same contracts as ``hdgmm._pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log

cnp.import_array()


def spiked_quadform(const double[::1] sqnorm, const double[:, ::1] proj,
                    const double[::1] inv_a, double inv_b):
    cdef Py_ssize_t n = proj.shape[0], d = proj.shape[1], i, j
    cdef double acc, zz, z
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            acc = 0.0
            zz = 0.0
            for j in range(d):
                z = proj[i, j] * proj[i, j]
                acc = acc + z * inv_a[j]
                zz = zz + z
            z = sqnorm[i] - zz
            if z < 0.0:
                z = 0.0
            o[i] = acc + z * inv_b
    return out


def normalize_log_rows(const double[:, ::1] logp):
    cdef Py_ssize_t n = logp.shape[0], k = logp.shape[1], i, j
    cdef double top, total
    resp = np.empty((n, k), dtype=np.float64)
    lse = np.empty(n, dtype=np.float64)
    cdef double[:, ::1] r = resp
    cdef double[::1] l = lse
    with nogil:
        for i in range(n):
            top = logp[i, 0]
            for j in range(1, k):
                if logp[i, j] > top:
                    top = logp[i, j]
            total = 0.0
            for j in range(k):
                r[i, j] = exp(logp[i, j] - top)
                total = total + r[i, j]
            for j in range(k):
                r[i, j] = r[i, j] / total
            l[i] = top + log(total)
    return resp, lse


def argmax_dot(const double[:, ::1] X, const double[::1] q):
    cdef Py_ssize_t n = X.shape[0], m = X.shape[1], i, j, best = 0
    cdef double s, best_s = 0.0
    if n == 0:
        raise ValueError("empty matrix")
    with nogil:
        for i in range(n):
            s = 0.0
            for j in range(m):
                s = s + X[i, j] * q[j]
            if i == 0 or s > best_s:
                best_s = s
                best = i
    return best, best_s


def nearest_row(const double[:, ::1] C, const double[::1] q):
    cdef Py_ssize_t n = C.shape[0], m = C.shape[1], i, j, best = 0
    cdef double s, t, best_s = 0.0
    if n == 0:
        raise ValueError("empty matrix")
    with nogil:
        for i in range(n):
            s = 0.0
            for j in range(m):
                t = C[i, j] - q[j]
                s = s + t * t
            if i == 0 or s < best_s:
                best_s = s
                best = i
    return best, best_s


def assign_nearest(const double[:, ::1] X, const double[:, ::1] C):
    cdef Py_ssize_t n = X.shape[0], m = X.shape[1], kk = C.shape[0]
    cdef Py_ssize_t i, j, k, best
    cdef double s, t, best_s
    labels = np.empty(n, dtype=np.intp)
    dist = np.empty(n, dtype=np.float64)
    cdef Py_ssize_t[::1] lab = labels
    cdef double[::1] dd = dist
    with nogil:
        for i in range(n):
            best = 0
            best_s = 0.0
            for k in range(kk):
                s = 0.0
                for j in range(m):
                    t = X[i, j] - C[k, j]
                    s = s + t * t
                if k == 0 or s < best_s:
                    best_s = s
                    best = k
            lab[i] = best
            dd[i] = best_s
    return labels, dist
