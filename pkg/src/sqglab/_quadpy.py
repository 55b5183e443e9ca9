"""Numpy fallback for the hot quadrature kernels.

Same node sets and summation structure as the compiled backend in
``_quadcore.pyx``; the two must agree to round-off (see tests).
"""

import numpy as np

BACKEND_NAME = "python"

_CHUNK = 64


def rowsums_pow32(a, b, c, v):
    """out[i] = sum_j v[j] / (a[i] + b[i]*c[j])**1.5  (a+b*c > 0 assumed)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    out = np.empty(a.shape[0], dtype=np.float64)
    for lo in range(0, a.shape[0], _CHUNK):
        hi = min(lo + _CHUNK, a.shape[0])
        d = a[lo:hi, None] + b[lo:hi, None] * c[None, :]
        out[lo:hi] = (d ** -1.5) @ v
    return out


def weighted_total(w, rows):
    """sum_i w[i]*rows[i] with compensated (Kahan) accumulation."""
    total = 0.0
    comp = 0.0
    prod = np.asarray(w, dtype=np.float64) * np.asarray(rows, dtype=np.float64)
    for x in prod:
        y = x - comp
        t = total + y
        comp = (t - total) - y
        total = t
    return total
