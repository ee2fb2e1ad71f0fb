# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled twin of ``_purepy``.

Same operations, same IEEE-754 evaluation order (the build disables FP
contraction), so results are bit-identical to the fallback.
"""

import numpy as np

BACKEND = "native"


def cum_tail(masses):
    """Backward compensated (Kahan) suffix sums; see the fallback docstring."""
    cdef double[:] m = np.ascontiguousarray(masses, dtype=np.float64)
    cdef Py_ssize_t n = m.shape[0]
    out_arr = np.empty(n + 1, dtype=np.float64)
    cdef double[:] out = out_arr
    cdef double total = 0.0, comp = 0.0, y, t
    cdef Py_ssize_t i
    out[n] = 0.0
    for i in range(n - 1, -1, -1):
        y = m[i] - comp
        t = total + y
        comp = (t - total) - y
        total = t
        out[i] = total
    return out_arr


def invert_many(points, cum, arrivals):
    """Piecewise-linear tail-mass inversion; see the fallback docstring."""
    cdef double[:] pts = np.ascontiguousarray(points, dtype=np.float64)
    cdef double[:] c = np.ascontiguousarray(cum, dtype=np.float64)
    cdef double[:] e = np.ascontiguousarray(arrivals, dtype=np.float64)
    cdef Py_ssize_t n = c.shape[0]
    cdef Py_ssize_t m = e.shape[0]
    out_arr = np.empty(m, dtype=np.float64)
    cdef double[:] out = out_arr
    cdef Py_ssize_t k, lo, hi, mid, idx, i
    cdef double ek, denom, frac
    for k in range(m):
        ek = e[k]
        if ek >= c[0]:
            out[k] = pts[0]
            continue
        if ek <= 0.0:
            out[k] = pts[n - 1]
            continue
        # smallest idx with c[idx] < ek (c is non-increasing)
        lo = 0
        hi = n
        while lo < hi:
            mid = (lo + hi) >> 1
            if c[mid] < ek:
                hi = mid
            else:
                lo = mid + 1
        idx = lo
        if idx < 1:
            idx = 1
        elif idx > n - 1:
            idx = n - 1
        i = idx - 1
        denom = c[i] - c[i + 1]
        if denom > 0.0:
            frac = (c[i] - ek) / denom
        else:
            frac = 0.0
        if frac < 0.0:
            frac = 0.0
        elif frac > 1.0:
            frac = 1.0
        out[k] = pts[i] + (pts[i + 1] - pts[i]) * frac
    return out_arr


def tail_mass_at(points, cum, x):
    """Linear interpolation of the tail-mass table; see the fallback."""
    cdef double[:] pts = np.ascontiguousarray(points, dtype=np.float64)
    cdef double[:] c = np.ascontiguousarray(cum, dtype=np.float64)
    cdef double[:] xs = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = pts.shape[0]
    cdef Py_ssize_t m = xs.shape[0]
    out_arr = np.empty(m, dtype=np.float64)
    cdef double[:] out = out_arr
    cdef Py_ssize_t k, lo, hi, mid, i
    cdef double xk, width, frac
    for k in range(m):
        xk = xs[k]
        if xk <= pts[0]:
            out[k] = c[0]
            continue
        if xk >= pts[n - 1]:
            out[k] = c[n - 1]
            continue
        # largest i with pts[i] <= xk
        lo = 0
        hi = n
        while lo < hi:
            mid = (lo + hi) >> 1
            if pts[mid] <= xk:
                lo = mid + 1
            else:
                hi = mid
        i = lo - 1
        if i < 0:
            i = 0
        elif i > n - 2:
            i = n - 2
        width = pts[i + 1] - pts[i]
        if width > 0.0:
            frac = (xk - pts[i]) / width
        else:
            frac = 0.0
        if frac < 0.0:
            frac = 0.0
        elif frac > 1.0:
            frac = 1.0
        out[k] = c[i] + (c[i + 1] - c[i]) * frac
    return out_arr
