"""Inverse-CDF sampling from tabulated densities.

Densities are treated as piecewise linear between grid points (matching the
trapezoid-rule CDFs used by the KS checks), so draws are exact for the
tabulated density, with no MCMC or rejection ambiguity.
"""

from __future__ import annotations

import numpy as np


def member_rng(base_seed: int, index: int) -> np.random.Generator:
    """Counter-based per-member stream; independent of evaluation order."""
    return np.random.Generator(np.random.Philox(key=(int(base_seed) << 64) + int(index)))


def _trapezoid_cdf(x: np.ndarray, rho: np.ndarray) -> np.ndarray:
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (rho[1:] + rho[:-1]) * np.diff(x))])
    return cdf / cdf[-1]


def _invert_cell(rho0, rho1, s):
    """Solve for t in [0,1]: integral of the linear density up to t equals
    fraction s of the cell mass."""
    delta = rho1 - rho0
    mass = 0.5 * (rho0 + rho1)
    # near-flat cells: the quadratic degenerates, use the linear answer
    flat = np.abs(delta) <= 1e-12 * np.maximum(mass, 1e-300)
    disc = np.sqrt(np.maximum(rho0 * rho0 + 2.0 * delta * s * mass, 0.0))
    t = np.where(flat, s, (disc - rho0) / np.where(flat, 1.0, delta))
    return np.clip(t, 0.0, 1.0)


def sample_from_density_1d(x: np.ndarray, rho: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Map uniforms u in [0,1) to draws from the piecewise-linear density."""
    x = np.asarray(x, dtype=float)
    rho = np.maximum(np.asarray(rho, dtype=float), 0.0)
    cdf = _trapezoid_cdf(x, rho)
    cell = np.clip(np.searchsorted(cdf, u, side="right") - 1, 0, x.size - 2)
    cmass = cdf[cell + 1] - cdf[cell]
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.where(cmass > 0, (u - cdf[cell]) / cmass, 0.0)
    t = _invert_cell(rho[cell], rho[cell + 1], np.clip(s, 0.0, 1.0))
    return x[cell] + t * (x[cell + 1] - x[cell])


def sample_from_density_2d(
    x: np.ndarray,
    y: np.ndarray,
    rho: np.ndarray,
    u: np.ndarray,
    chunk: int = 20000,
) -> np.ndarray:
    """Draws from a tabulated 2D density via marginal + conditional inversion.

    ``u`` has shape (m, 2): the first column samples the x-marginal, the
    second the conditional along y at the drawn x (columns blended linearly).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    rho = np.maximum(np.asarray(rho, dtype=float), 0.0)
    marginal = np.trapezoid(rho, y, axis=1)
    xs = sample_from_density_1d(x, marginal, u[:, 0])
    ys = np.empty_like(xs)
    inv_dx = 1.0 / (x[1] - x[0])
    for lo in range(0, xs.size, chunk):
        hi = min(lo + chunk, xs.size)
        xc = xs[lo:hi]
        fi = np.clip(np.floor((xc - x[0]) * inv_dx).astype(np.intp), 0, x.size - 2)
        fx = (xc - x[fi]) * inv_dx
        cols = rho[fi] * (1.0 - fx[:, None]) + rho[fi + 1] * fx[:, None]
        ys[lo:hi] = _rowwise_sample(y, cols, u[lo:hi, 1])
    return np.stack([xs, ys], axis=1)


def _rowwise_sample(y: np.ndarray, rows: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Vectorized 1D inverse-CDF draw, one density row per sample."""
    dy = np.diff(y)
    masses = 0.5 * (rows[:, 1:] + rows[:, :-1]) * dy
    cdf = np.concatenate([np.zeros((rows.shape[0], 1)), np.cumsum(masses, axis=1)], axis=1)
    total = cdf[:, -1:]
    cdf = cdf / np.where(total > 0, total, 1.0)
    # row-wise searchsorted
    cell = (cdf[:, :-1] <= u[:, None]).sum(axis=1) - 1
    cell = np.clip(cell, 0, y.size - 2)
    rr = np.arange(rows.shape[0])
    cmass = cdf[rr, cell + 1] - cdf[rr, cell]
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.where(cmass > 0, (u - cdf[rr, cell]) / cmass, 0.0)
    t = _invert_cell(rows[rr, cell], rows[rr, cell + 1], np.clip(s, 0.0, 1.0))
    return y[cell] + t * dy[cell]
