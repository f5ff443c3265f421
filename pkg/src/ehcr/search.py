"""One-dimensional maximization: uniform grid scan plus golden-section refinement.

Objectives may return ``-inf`` to mark infeasible points; ties always resolve
toward the smaller argument.
"""

import math

import numpy as np

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
INV_PHI2 = (3.0 - math.sqrt(5.0)) / 2.0


def golden_max(f, a, b, tol=1e-6):
    """Golden-section search for a maximum of scalar ``f`` on [a, b].

    Returns ``(x, f(x), n_evals)``; the final interval is narrower than ``tol``.
    """
    a, b = min(a, b), max(a, b)
    h = b - a
    if h <= tol:
        return a, f(a), 1
    n = int(math.ceil(math.log(tol / h) / math.log(INV_PHI)))
    c = a + INV_PHI2 * h
    d = a + INV_PHI * h
    yc, yd = f(c), f(d)
    evals = 2
    for _ in range(n - 1):
        if yc >= yd:
            b, d, yd = d, c, yc
            h *= INV_PHI
            c = a + INV_PHI2 * h
            yc = f(c)
        else:
            a, c, yc = c, d, yd
            h *= INV_PHI
            d = a + INV_PHI * h
            yd = f(d)
        evals += 1
    if yc >= yd:
        return c, yc, evals
    return d, yd, evals


def grid_golden_max(f_vec, lo, hi, points=256, tol=1e-6, scalar=None):
    """Maximize vectorized ``f_vec`` on [lo, hi].

    Scans ``points`` uniform grid points, then refines between the best
    point's neighbours. ``scalar``, if given, is a float-in float-out
    version of ``f_vec`` used for the refinement. Returns ``(x, value, n_evals)``.
    """
    if hi <= lo:
        return lo, float(f_vec(np.array([lo]))[0]), 1
    grid = np.linspace(lo, hi, points)
    vals = np.asarray(f_vec(grid), dtype=float)
    i = int(np.argmax(vals))
    best_x, best_v = float(grid[i]), float(vals[i])
    if not np.isfinite(best_v):
        return best_x, best_v, points
    left = grid[max(i - 1, 0)]
    right = grid[min(i + 1, points - 1)]
    if scalar is None:
        scalar = lambda t: float(f_vec(np.array([t]))[0])  # noqa: E731
    x, v, n = golden_max(scalar, float(left), float(right), tol)
    if v > best_v or (v == best_v and x < best_x):
        best_x, best_v = x, v
    return best_x, best_v, points + n
