"""Wavefunction construction, propagation, and phase-gradient checks."""

import math

import numpy as np
import pytest

from pilotlab.errors import (
    DestructiveAnnihilationError,
    GridMismatchError,
    PacketTouchesBoundaryError,
    StabilityBoundError,
    WidthTooSmallError,
)
from pilotlab.grid import (
    FreePotential,
    Grid,
    HarmonicPotential,
    WaveFunction,
    check_stability,
    expectation_energy,
    make_gaussian_packet,
    phase_gradient,
    propagate,
    superpose,
)


@pytest.fixture
def grid():
    return Grid.regular((-20.0, 20.0), 512)


def two_slit(grid, separation=8.0, width=1.0, k=0.0):
    a = make_gaussian_packet(grid, -separation / 2, width, k)
    b = make_gaussian_packet(grid, +separation / 2, width, k)
    inv = 1.0 / math.sqrt(2.0)
    return superpose(a, b, (inv, inv))


class TestGrid:
    def test_rejects_small_point_counts(self):
        with pytest.raises(ValueError):
            Grid.regular((-1.0, 1.0), 32)

    def test_rejects_non_power_of_two(self):
        with pytest.raises(ValueError):
            Grid.regular((-1.0, 1.0), 96)

    def test_spacing(self, grid):
        assert grid.spacing == (40.0 / 512,)

    def test_contains(self, grid):
        inside = grid.contains(np.array([[0.0], [-19.9]]))
        outside = grid.contains(np.array([[20.0], [25.0]]))
        assert inside.all() and not outside.any()


class TestGaussianPacket:
    def test_normalized(self, grid):
        wf = make_gaussian_packet(grid, 0.0, 1.0, 2.0)
        assert abs(wf.norm() - 1.0) < 1e-9

    def test_zero_wavevector_has_flat_phase(self, grid):
        wf = make_gaussian_packet(grid, 0.0, 1.0, 0.0)
        pg = phase_gradient(wf)
        assert np.nanmax(np.abs(pg.values[pg.defined])) < 1e-6

    def test_plane_wave_phase_gradient(self, grid):
        wf = make_gaussian_packet(grid, 0.0, 1.5, 5.0)
        pg = phase_gradient(wf)
        dens = wf.density()
        sel = pg.defined & (dens > 1e-6 * dens.max())
        assert np.max(np.abs(pg.values[sel, 0] - 5.0)) < 1e-6

    def test_width_too_small(self, grid):
        with pytest.raises(WidthTooSmallError):
            make_gaussian_packet(grid, 0.0, 2.0 * grid.spacing[0], 0.0)

    def test_packet_touching_boundary(self, grid):
        with pytest.raises(PacketTouchesBoundaryError):
            make_gaussian_packet(grid, -19.0, 2.0, 0.0)


class TestSuperpose:
    def test_identity_weights(self, grid):
        a = make_gaussian_packet(grid, -4.0, 1.0, 0.0)
        b = make_gaussian_packet(grid, 4.0, 1.0, 0.0)
        out = superpose(a, b, (1.0, 0.0))
        np.testing.assert_allclose(out.psi, a.psi, atol=1e-12)

    def test_destructive_annihilation(self, grid):
        a = make_gaussian_packet(grid, 0.0, 1.0, 0.0)
        inv = 1.0 / math.sqrt(2.0)
        with pytest.raises(DestructiveAnnihilationError):
            superpose(a, a, (inv, -inv))

    def test_grid_mismatch(self, grid):
        other = Grid.regular((-20.0, 20.0), 256)
        a = make_gaussian_packet(grid, 0.0, 1.0, 0.0)
        b = make_gaussian_packet(other, 0.0, 1.0, 0.0)
        with pytest.raises(GridMismatchError):
            superpose(a, b, (1.0, 1.0))

    def test_each_slit_carries_half_the_mass(self, grid):
        wf = two_slit(grid)
        x = grid.axis(0)
        rho = wf.density()
        left = float(np.sum(rho[x < 0]) * grid.cell_volume)
        assert abs(left - 0.5) < 1e-4


class TestPropagate:
    def test_zero_steps_identity(self, grid):
        wf = make_gaussian_packet(grid, 0.0, 1.0, 1.0)
        out = propagate(wf, FreePotential(), 0.01, 0)
        np.testing.assert_array_equal(out.psi, wf.psi)

    def test_free_gaussian_spreading_width(self, grid):
        # sigma(t) = sigma0 * sqrt(1 + (hbar t / 2 m sigma0^2)^2)
        wf = make_gaussian_packet(grid, 0.0, 1.0, 0.0)
        out = propagate(wf, FreePotential(), 0.01, 100)
        x = grid.axis(0)
        rho = out.density() * grid.cell_volume
        mean = float(np.sum(x * rho))
        width = math.sqrt(float(np.sum((x - mean) ** 2 * rho)))
        assert abs(width - math.sqrt(1.25)) < 1e-4

    def test_free_gaussian_pointwise_amplitude(self, grid):
        # closed-form spreading Gaussian, evaluated independently
        t, s0 = 1.0, 1.0
        wf = make_gaussian_packet(grid, 0.0, s0, 0.0)
        out = propagate(wf, FreePotential(), 0.001, 1000)
        x = grid.axis(0)
        st = s0 * math.sqrt(1.0 + (t / (2.0 * s0**2)) ** 2)
        ref = (2.0 * math.pi * st**2) ** -0.25 * np.exp(-(x**2) / (4.0 * st**2))
        assert np.max(np.abs(np.abs(out.psi) - ref)) < 1e-6

    def test_harmonic_revival(self, grid):
        omega = 1.0
        wf = make_gaussian_packet(grid, 3.0, 1.0, 0.0)
        period = 2.0 * math.pi / omega
        out = propagate(wf, HarmonicPotential(omega), period / 4000, 4000)
        assert abs(abs(wf.inner(out)) - 1.0) < 1e-5

    def test_norm_drift_per_1000_steps(self, grid):
        wf = make_gaussian_packet(grid, 0.0, 1.0, 3.0)
        out = propagate(wf, HarmonicPotential(0.5), 0.002, 1000)
        assert abs(out.norm() - 1.0) < 1e-9

    def test_energy_conservation(self, grid):
        wf = make_gaussian_packet(grid, 2.0, 1.0, 1.0)
        V = HarmonicPotential(1.0)
        e0 = expectation_energy(wf, V)
        out = propagate(wf, V, 0.0005, 1000)
        assert abs(expectation_energy(out, V) - e0) / abs(e0) < 1e-7

    def test_second_order_convergence(self, grid):
        # halving dt must shrink the splitting error by about 4x
        wf = make_gaussian_packet(grid, 2.0, 1.0, 0.0)
        V = HarmonicPotential(1.0)
        ref = propagate(wf, V, 1.0 / 16384, 16384)
        errs = []
        for steps in (512, 1024, 2048):
            out = propagate(wf, V, 1.0 / steps, steps)
            errs.append(np.max(np.abs(out.psi - ref.psi)))
        orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
        assert all(1.8 < o < 2.2 for o in orders)

    def test_stability_bound(self, grid):
        wf = make_gaussian_packet(grid, 0.0, 1.0, 0.0)
        with pytest.raises(StabilityBoundError):
            check_stability(wf, HarmonicPotential(1.0), 1e3)


class TestPhaseGradient:
    def test_real_wavefunction(self, grid):
        wf = make_gaussian_packet(grid, 0.0, 1.0, 0.0)
        pg = phase_gradient(wf)
        assert np.nanmax(np.abs(pg.values[pg.defined])) < 1e-6

    def test_undefined_below_cutoff_is_flagged(self, grid):
        wf = make_gaussian_packet(grid, 0.0, 1.0, 1.0)
        pg = phase_gradient(wf)
        assert not pg.defined.all()
        assert np.isnan(pg.values[~pg.defined]).all()

    def test_two_slit_matches_analytic_velocity(self, grid):
        # each free Gaussian evolves in closed form, so the exact velocity
        # of the superposition is available as an independent oracle
        t = 1.0
        wf = propagate(two_slit(grid, k=1.0), FreePotential(), 0.01, 100)
        pg = phase_gradient(wf)

        def packet(x, c):
            sc = 1.0 + 0.5j * t
            return np.sqrt(1.0 / sc) * np.exp(
                -((x - c - t) ** 2) / (4.0 * sc) + 1j * x - 0.5j * t
            )

        def field(x):
            return packet(x, -4.0) + packet(x, 4.0)

        dens = wf.density()
        sel = pg.defined & (dens > 1e-3 * dens.max())
        xs = grid.axis(0)[sel]
        h = 1e-5
        exact = np.imag((field(xs + h) - field(xs - h)) / (2.0 * h) / field(xs))
        assert np.max(np.abs(pg.values[sel, 0] - exact)) < 1e-6


def test_wavefunction_rejects_unnormalized(grid):
    psi = np.ones(grid.shape, dtype=complex)
    with pytest.raises(ValueError):
        WaveFunction(grid, psi)
