# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled scan kernels."""
import numpy as np

cimport numpy as cnp

cnp.import_array()


def min_thin_scan(x1, z, eps):
    """x[0] = x1; x[t] = min(x[t-1], z[t-1]) + eps[t-1]."""
    z_arr = np.ascontiguousarray(z, dtype=np.int64)
    eps_arr = np.ascontiguousarray(eps, dtype=np.int64)
    if z_arr.shape != eps_arr.shape or z_arr.ndim != 1:
        raise ValueError("z and eps must be 1-D arrays of equal length")
    cdef cnp.int64_t[::1] zv = z_arr
    cdef cnp.int64_t[::1] ev = eps_arr
    cdef Py_ssize_t n = zv.shape[0]
    out_arr = np.empty(n + 1, dtype=np.int64)
    cdef cnp.int64_t[::1] out = out_arr
    cdef cnp.int64_t prev = <cnp.int64_t> x1
    cdef cnp.int64_t zt
    cdef Py_ssize_t t
    out[0] = prev
    for t in range(n):
        zt = zv[t]
        if zt < prev:
            prev = zt
        prev = prev + ev[t]
        out[t + 1] = prev
    return out_arr
