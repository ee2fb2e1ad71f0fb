"""NumPy fallback for the hot kernels.

Algorithms mirror ``_native.pyx`` operation-for-operation so both backends
produce bit-identical float64 results; tests assert that equivalence.
"""

import numpy as np

BACKEND = "purepy"


def cum_tail(masses):
    """Backward compensated (Kahan) suffix sums of the bin masses.

    Returns an array one longer than ``masses``: out[i] = sum(masses[i:]),
    out[-1] = 0.  Compensation matters once extensions push the bin count
    toward 1e5 with masses spanning ~20 orders of magnitude.
    """
    m = np.asarray(masses, dtype=np.float64)
    n = m.shape[0]
    out = np.empty(n + 1, dtype=np.float64)
    out[n] = 0.0
    total = 0.0
    comp = 0.0
    for i in range(n - 1, -1, -1):
        y = m[i] - comp
        t = total + y
        comp = (t - total) - y
        total = t
        out[i] = total
    return out


def invert_many(points, cum, arrivals):
    """Piecewise-linear inversion of the tabulated tail mass.

    ``cum`` is non-increasing over increasing ``points``.  For each arrival e
    the bracketing bin with cum[i] >= e > cum[i+1] is found by binary search
    and the jump is interpolated linearly in x.  Arrivals above cum[0] clamp
    to points[0] (callers extend the grid first); e <= 0 maps to the last
    point.
    """
    pts = np.asarray(points, dtype=np.float64)
    c = np.asarray(cum, dtype=np.float64)
    e = np.asarray(arrivals, dtype=np.float64)
    # cum reversed is non-decreasing; searchsorted on the reversed array
    # locates the first index (from the right) with cum < e.
    rev = c[::-1]
    j = np.searchsorted(rev, e, side="left")
    idx = c.shape[0] - j  # first index with cum[idx] < e; bin is idx-1
    idx = np.clip(idx, 1, c.shape[0] - 1)
    i = idx - 1
    denom = c[i] - c[i + 1]
    frac = np.where(denom > 0.0, (c[i] - e) / np.where(denom > 0.0, denom, 1.0), 0.0)
    frac = np.clip(frac, 0.0, 1.0)
    out = pts[i] + (pts[i + 1] - pts[i]) * frac
    out = np.where(e >= c[0], pts[0], out)
    out = np.where(e <= 0.0, pts[-1], out)
    return out


def tail_mass_at(points, cum, x):
    """Linear interpolation of the tabulated tail mass at arbitrary x.

    Exact inverse of :func:`invert_many` on the table's range; x below the
    table clamps to cum[0], x above to 0.
    """
    pts = np.asarray(points, dtype=np.float64)
    c = np.asarray(cum, dtype=np.float64)
    xs = np.asarray(x, dtype=np.float64)
    i = np.searchsorted(pts, xs, side="right") - 1
    i = np.clip(i, 0, pts.shape[0] - 2)
    width = pts[i + 1] - pts[i]
    frac = np.where(width > 0.0, (xs - pts[i]) / np.where(width > 0.0, width, 1.0), 0.0)
    frac = np.clip(frac, 0.0, 1.0)
    out = c[i] + (c[i + 1] - c[i]) * frac
    out = np.where(xs <= pts[0], c[0], out)
    out = np.where(xs >= pts[-1], c[-1], out)
    return out
