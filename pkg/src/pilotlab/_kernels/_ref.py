"""Pure-numpy reference implementation of the interpolation kernels.

Arithmetic is ordered identically to the compiled core so both backends
produce bit-identical results; the compiled version only removes the
temporary-array overhead of the vectorized expressions.
"""

import numpy as np

NAME = "python"


def interp_time_1d(fa, fb, wt, x0, inv_dx, xs):
    """Linear interpolation in space and time.

    ``fa``/``fb`` are field samples at two snapshot times, ``wt`` in [0,1] the
    time blend.  Positions outside the table (or landing on NaN samples)
    yield NaN.
    """
    n = fa.shape[0]
    u = (xs - x0) * inv_dx
    i = np.floor(u)
    bad = ~((i >= 0) & (i <= n - 2))
    i = np.where(bad, 0, i).astype(np.intp)
    fx = u - i
    va = fa[i] * (1.0 - fx) + fa[i + 1] * fx
    vb = fb[i] * (1.0 - fx) + fb[i + 1] * fx
    out = va + wt * (vb - va)
    out[bad] = np.nan
    return out


def interp_time_2d(fa, fb, wt, x0, y0, inv_dx, inv_dy, xs, ys):
    """Bilinear space interpolation blended linearly between two snapshots."""
    nx, ny = fa.shape
    u = (xs - x0) * inv_dx
    v = (ys - y0) * inv_dy
    i = np.floor(u)
    j = np.floor(v)
    bad = ~((i >= 0) & (i <= nx - 2) & (j >= 0) & (j <= ny - 2))
    i = np.where(bad, 0, i).astype(np.intp)
    j = np.where(bad, 0, j).astype(np.intp)
    fx = u - i
    fy = v - j
    a00 = fa[i, j]
    a10 = fa[i + 1, j]
    a01 = fa[i, j + 1]
    a11 = fa[i + 1, j + 1]
    ax0 = a00 + fx * (a10 - a00)
    ax1 = a01 + fx * (a11 - a01)
    va = ax0 + fy * (ax1 - ax0)
    b00 = fb[i, j]
    b10 = fb[i + 1, j]
    b01 = fb[i, j + 1]
    b11 = fb[i + 1, j + 1]
    bx0 = b00 + fx * (b10 - b00)
    bx1 = b01 + fx * (b11 - b01)
    vb = bx0 + fy * (bx1 - bx0)
    out = va + wt * (vb - va)
    out[bad] = np.nan
    return out
