# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel routines: fused pairwise RBF evaluation.

Same contracts as `_pykernels`; avoids the (n1, n2, d) broadcast temporary.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp

cnp.import_array()

BACKEND_NAME = "compiled"


def rbf_cross(x1, x2, double amplitude, double length_scale):
    """Cross-kernel matrix k(x1_i, x2_j) = v * exp(-||x1_i - x2_j||^2 / (2 l^2))."""
    cdef double[:, ::1] a = np.ascontiguousarray(x1, dtype=np.float64)
    cdef double[:, ::1] b = np.ascontiguousarray(x2, dtype=np.float64)
    cdef Py_ssize_t n1 = a.shape[0], n2 = b.shape[0], d = a.shape[1]
    cdef double inv2l2 = -1.0 / (2.0 * length_scale * length_scale)
    out_arr = np.empty((n1, n2), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, k
    cdef double sq, diff
    with nogil:
        for i in range(n1):
            for j in range(n2):
                sq = 0.0
                for k in range(d):
                    diff = a[i, k] - b[j, k]
                    sq += diff * diff
                out[i, j] = amplitude * exp(sq * inv2l2)
    return out_arr


def rbf_gram(x, double amplitude, double length_scale, diag_add):
    """Symmetric Gram matrix with `diag_add` (per-point noise + jitter) on the diagonal."""
    cdef double[:, ::1] a = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[::1] dadd = np.ascontiguousarray(diag_add, dtype=np.float64)
    cdef Py_ssize_t n = a.shape[0], d = a.shape[1]
    cdef double inv2l2 = -1.0 / (2.0 * length_scale * length_scale)
    out_arr = np.empty((n, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, k
    cdef double sq, diff
    with nogil:
        for i in range(n):
            out[i, i] = amplitude + dadd[i]
            for j in range(i + 1, n):
                sq = 0.0
                for k in range(d):
                    diff = a[i, k] - a[j, k]
                    sq += diff * diff
                out[i, j] = amplitude * exp(sq * inv2l2)
                out[j, i] = out[i, j]
    return out_arr
