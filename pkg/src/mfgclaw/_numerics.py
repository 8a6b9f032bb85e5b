"""Small vectorized root-finding helpers used across modules."""

from __future__ import annotations

import numpy as np


def invert_monotone(fn, target, lo, hi, max_iter=200):
    """Solve ``fn(u) = target`` elementwise on ``[lo, hi]`` by bisection.

    ``fn`` must be monotone (either direction) on every bracket and accept
    arrays.  Targets outside ``[fn(lo), fn(hi)]`` are clipped to the nearer
    endpoint.  Iterates until the brackets collapse to adjacent floats.
    """
    target = np.asarray(target, dtype=float)
    lo, hi, target = np.broadcast_arrays(
        np.asarray(lo, dtype=float), np.asarray(hi, dtype=float), target
    )
    lo0, hi0 = lo, hi
    lo = lo.copy()
    hi = hi.copy()
    f_lo = np.asarray(fn(lo), dtype=float) - target
    f_hi = np.asarray(fn(hi), dtype=float) - target
    increasing = f_hi >= f_lo
    # orient every bracket so that g(lo) <= 0 <= g(hi)
    sign = np.where(increasing, 1.0, -1.0)
    below = sign * f_lo >= 0
    above = sign * f_hi <= 0
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        active = (mid > lo) & (mid < hi)
        if not active.any():
            break
        g = sign * (np.asarray(fn(mid), dtype=float) - target)
        go_right = active & (g < 0)
        go_left = active & (g >= 0)
        lo = np.where(go_right, mid, lo)
        hi = np.where(go_left, mid, hi)
    out = 0.5 * (lo + hi)
    # values that were outside the attainable range stay at the endpoint
    out = np.where(below, lo0, out)
    out = np.where(above & ~below, hi0, out)
    return out if out.ndim else float(out)


def central_difference(fn, x, h):
    return (fn(x + h) - fn(x - h)) / (2.0 * h)
