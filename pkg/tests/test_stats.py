"""Kolmogorov-Smirnov helpers, histograms, and bootstrap errors."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sps

from pilotlab.errors import SampleTooSmallError
from pilotlab.stats import (
    Histogram,
    bootstrap_se,
    ks_against_density,
    ks_two_sample,
)


class TestHistogram:
    def test_density_integrates_to_one(self):
        rng = np.random.default_rng(3)
        h = Histogram.from_samples(rng.normal(size=1000), np.linspace(-6, 6, 25))
        assert abs(np.sum(h.density() * np.diff(h.edges)) - 1.0) < 1e-12

    def test_rejects_unsorted_edges(self):
        with pytest.raises(ValueError):
            Histogram(np.array([0.0, 2.0, 1.0]), np.array([1, 1]))

    def test_rejects_count_shape_mismatch(self):
        with pytest.raises(ValueError):
            Histogram(np.array([0.0, 1.0, 2.0]), np.array([1, 1, 1]))

    def test_total(self):
        h = Histogram(np.array([0.0, 1.0, 2.0]), np.array([3, 4]))
        assert h.total == 7


class TestKSTwoSample:
    def test_identical_samples_give_zero_statistic(self):
        a = np.linspace(0, 1, 200)
        r = ks_two_sample(a, a)
        assert r.statistic == 0.0 and r.pvalue == 1.0

    def test_matches_scipy(self):
        rng = np.random.default_rng(5)
        a = rng.normal(size=400)
        b = rng.normal(0.1, 1.1, size=300)
        ours = ks_two_sample(a, b)
        ref = sps.ks_2samp(a, b, method="asymp")
        assert abs(ours.statistic - ref.statistic) < 1e-12
        assert abs(ours.pvalue - ref.pvalue) < 1e-3

    def test_disjoint_samples(self):
        r = ks_two_sample(np.arange(100), np.arange(100) + 1000)
        assert r.statistic == 1.0 and r.pvalue < 1e-10

    def test_small_sample_rejected(self):
        with pytest.raises(SampleTooSmallError):
            ks_two_sample(np.arange(10), np.arange(100))

    @given(st.integers(0, 2**31 - 1))
    @settings(max_examples=20, deadline=None)
    def test_statistic_bounds_and_symmetry(self, seed):
        rng = np.random.default_rng(seed)
        a = rng.normal(size=80)
        b = rng.uniform(-2, 2, size=120)
        r1, r2 = ks_two_sample(a, b), ks_two_sample(b, a)
        assert 0.0 <= r1.statistic <= 1.0
        assert 0.0 <= r1.pvalue <= 1.0
        assert r1.statistic == r2.statistic and r1.pvalue == r2.pvalue

    @given(st.floats(-5, 5), st.floats(0.1, 3))
    @settings(max_examples=20, deadline=None)
    def test_invariant_under_affine_map(self, shift, scale):
        rng = np.random.default_rng(11)
        a = rng.normal(size=150)
        b = rng.normal(size=150)
        r1 = ks_two_sample(a, b)
        r2 = ks_two_sample(scale * a + shift, scale * b + shift)
        assert abs(r1.statistic - r2.statistic) < 1e-12


class TestKSAgainstDensity:
    def test_normal_sample_against_normal_density(self):
        rng = np.random.default_rng(12)
        sample = rng.normal(size=2000)
        x = np.linspace(-8, 8, 2001)
        dens = np.exp(-0.5 * x**2) / np.sqrt(2 * np.pi)
        r = ks_against_density(sample, x, dens)
        ref = sps.kstest(sample, "norm")
        assert abs(r.statistic - ref.statistic) < 1e-4
        assert r.pvalue > 0.01

    def test_wrong_density_rejected(self):
        rng = np.random.default_rng(7)
        sample = rng.normal(1.0, 1.0, size=2000)
        x = np.linspace(-8, 8, 2001)
        dens = np.exp(-0.5 * x**2) / np.sqrt(2 * np.pi)
        assert ks_against_density(sample, x, dens).pvalue < 1e-6

    def test_unnormalized_density_is_rescaled(self):
        rng = np.random.default_rng(9)
        sample = rng.uniform(0, 1, size=500)
        x = np.linspace(0, 1, 101)
        r1 = ks_against_density(sample, x, np.ones_like(x))
        r2 = ks_against_density(sample, x, 7.5 * np.ones_like(x))
        assert abs(r1.statistic - r2.statistic) < 1e-12

    def test_zero_density_raises(self):
        with pytest.raises(ValueError):
            ks_against_density(np.zeros(100), np.linspace(0, 1, 11), np.zeros(11))


class TestBootstrapSE:
    def test_matches_analytic_sem(self):
        rng = np.random.default_rng(21)
        values = rng.normal(size=4000)
        se = bootstrap_se(values, resamples=2000, seed=0)
        sem = values.std(ddof=1) / np.sqrt(values.size)
        assert abs(se - sem) / sem < 0.1

    def test_deterministic_for_seed(self):
        values = np.arange(100, dtype=float)
        assert bootstrap_se(values, seed=4) == bootstrap_se(values, seed=4)
        assert bootstrap_se(values, seed=4) != bootstrap_se(values, seed=5)

    def test_constant_values_give_zero(self):
        assert bootstrap_se(np.full(50, 3.0)) == 0.0

    def test_too_few_values(self):
        with pytest.raises(SampleTooSmallError):
            bootstrap_se(np.arange(5))

    def test_too_few_resamples(self):
        with pytest.raises(SampleTooSmallError):
            bootstrap_se(np.arange(50), resamples=100)
