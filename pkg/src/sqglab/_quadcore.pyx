# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops for the singular-quadrature panel sums."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

BACKEND_NAME = "cython"


def rowsums_pow32(double[::1] a, double[::1] b, double[::1] c, double[::1] v):
    """out[i] = sum_j v[j] / (a[i] + b[i]*c[j])**1.5 with Kahan accumulation."""
    cdef Py_ssize_t n = a.shape[0], m = c.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef double[::1] ov = out
    cdef Py_ssize_t i, j
    cdef double ai, bi, d, s, comp, y, t
    for i in range(n):
        ai = a[i]
        bi = b[i]
        s = 0.0
        comp = 0.0
        for j in range(m):
            d = ai + bi * c[j]
            y = v[j] / (d * sqrt(d)) - comp
            t = s + y
            comp = (t - s) - y
            s = t
        ov[i] = s
    return out


def weighted_total(double[::1] w, double[::1] rows):
    cdef Py_ssize_t n = w.shape[0]
    cdef Py_ssize_t i
    cdef double s = 0.0, comp = 0.0, y, t
    for i in range(n):
        y = w[i] * rows[i] - comp
        t = s + y
        comp = (t - s) - y
        s = t
    return s
