"""Statistical verification utilities shared by the experiment modules."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import kolmogorov

from .errors import SampleTooSmallError

#: Minimum sample size for the asymptotic Kolmogorov p-value to be trusted.
MIN_KS_SAMPLES = 50


@dataclass(frozen=True)
class KSResult:
    statistic: float
    pvalue: float


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=float)
        counts = np.asarray(self.counts)
        if edges.ndim != 1 or np.any(np.diff(edges) <= 0):
            raise ValueError("edges must be strictly increasing")
        if counts.shape != (edges.size - 1,):
            raise ValueError("counts must have len(edges)-1 entries")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def density(self) -> np.ndarray:
        """counts / (n * width); integrates to 1 over the binned range."""
        widths = np.diff(self.edges)
        return self.counts / (self.total * widths)

    @classmethod
    def from_samples(cls, samples, edges) -> "Histogram":
        counts, edges = np.histogram(np.asarray(samples, dtype=float), bins=np.asarray(edges, dtype=float))
        return cls(edges, counts)


def ks_two_sample(a, b) -> KSResult:
    """Exact two-sample KS statistic with the asymptotic Kolmogorov p-value."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    n1, n2 = a.size, b.size
    if n1 < MIN_KS_SAMPLES or n2 < MIN_KS_SAMPLES:
        raise SampleTooSmallError(f"need >= {MIN_KS_SAMPLES} samples per side, got {n1}, {n2}")
    both = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, both, side="right") / n1
    cdf_b = np.searchsorted(b, both, side="right") / n2
    d = float(np.max(np.abs(cdf_a - cdf_b)))
    en = np.sqrt(n1 * n2 / (n1 + n2))
    return KSResult(d, float(kolmogorov(en * d)))


def ks_against_density(sample, x: np.ndarray, density: np.ndarray) -> KSResult:
    """One-sample KS test of ``sample`` against a tabulated 1D density.

    The density is integrated to a CDF by the trapezoid rule on the grid
    ``x`` and evaluated at the sample points by linear interpolation.
    """
    sample = np.sort(np.asarray(sample, dtype=float))
    n = sample.size
    if n < MIN_KS_SAMPLES:
        raise SampleTooSmallError(f"need >= {MIN_KS_SAMPLES} samples, got {n}")
    x = np.asarray(x, dtype=float)
    density = np.asarray(density, dtype=float)
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (density[1:] + density[:-1]) * np.diff(x))])
    if cdf[-1] <= 0:
        raise ValueError("density integrates to zero")
    cdf = cdf / cdf[-1]
    f = np.interp(sample, x, cdf, left=0.0, right=1.0)
    ecdf_hi = np.arange(1, n + 1) / n
    ecdf_lo = np.arange(0, n) / n
    d = float(max(np.max(ecdf_hi - f), np.max(f - ecdf_lo)))
    return KSResult(d, float(kolmogorov(np.sqrt(n) * d)))


def bootstrap_se(values, resamples: int = 500, seed: int = 0) -> float:
    """Bootstrap standard error of the mean; deterministic for a given seed."""
    values = np.asarray(values, dtype=float)
    if values.size < 10:
        raise SampleTooSmallError(f"need >= 10 values, got {values.size}")
    if resamples < 200:
        raise SampleTooSmallError(f"need >= 200 resamples, got {resamples}")
    rng = np.random.Generator(np.random.Philox(key=seed))
    idx = rng.integers(0, values.size, size=(resamples, values.size))
    means = values[idx].mean(axis=1)
    return float(np.std(means, ddof=1))
