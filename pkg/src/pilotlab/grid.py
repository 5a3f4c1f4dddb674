"""Uniform-grid complex wavefunctions and spectral propagation.

The machinery here is standard split-step Fourier: wavefunctions live on a
periodic uniform grid (1D or 2D), kinetic evolution is applied in momentum
space, potentials act pointwise.  Everything downstream (trajectories, weak
measurements, the interferometer) is built on these primitives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import (
    DestructiveAnnihilationError,
    GridMismatchError,
    PacketTouchesBoundaryError,
    StabilityBoundError,
    WidthTooSmallError,
)

#: Fraction of max|psi|^2 below which the phase gradient is flagged undefined.
DENSITY_CUTOFF_FRACTION = 1e-8

#: Amplitude guard at the grid boundary; periodic wrap-around beyond this is an error.
BOUNDARY_GUARD = 1e-12

#: Maximum phase advance per split step at the grid's Nyquist wavenumber.
#: Steps larger than this alias the fastest resolved mode and are rejected.
STABILITY_PHASE_BOUND = math.pi

_MIN_POINTS = 64


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid over [min, max) per axis; 1 or 2 dimensions."""

    extents: tuple[tuple[float, float], ...]
    shape: tuple[int, ...]

    def __post_init__(self):
        if len(self.extents) != len(self.shape):
            raise ValueError("extents and shape must have equal length")
        if len(self.shape) not in (1, 2):
            raise ValueError("only 1D and 2D grids are supported")
        for (lo, hi), n in zip(self.extents, self.shape):
            if not hi > lo:
                raise ValueError(f"empty extent [{lo}, {hi})")
            if not _is_power_of_two(n) or n < _MIN_POINTS:
                raise ValueError(f"points per axis must be a power of two >= {_MIN_POINTS}, got {n}")

    @classmethod
    def regular(cls, extent: tuple[float, float], n: int, dims: int = 1) -> "Grid":
        """Grid with the same extent and point count on every axis."""
        return cls(tuple(extent for _ in range(dims)), tuple(n for _ in range(dims)))

    @property
    def dims(self) -> int:
        return len(self.shape)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple((hi - lo) / n for (lo, hi), n in zip(self.extents, self.shape))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def axis(self, a: int) -> np.ndarray:
        lo, hi = self.extents[a]
        n = self.shape[a]
        return lo + (hi - lo) * np.arange(n) / n

    def wavenumbers(self, a: int) -> np.ndarray:
        """Angular wavenumbers matching numpy's FFT ordering on axis ``a``."""
        return 2.0 * np.pi * np.fft.fftfreq(self.shape[a], d=self.spacing[a])

    def meshgrid(self) -> list[np.ndarray]:
        return list(np.meshgrid(*(self.axis(a) for a in range(self.dims)), indexing="ij"))

    def contains(self, x: np.ndarray) -> np.ndarray:
        """Elementwise test that positions lie inside the extent box."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        ok = np.ones(x.shape[0], dtype=bool)
        for a, (lo, hi) in enumerate(self.extents):
            ok &= (x[:, a] >= lo) & (x[:, a] < hi)
        return ok


@dataclass(frozen=True)
class WaveFunction:
    """Immutable complex wavefunction on a :class:`Grid`.

    Amplitudes are always L2-normalized: sum(|psi|^2) * cell_volume == 1.
    """

    grid: Grid
    psi: np.ndarray = field(repr=False)
    mass: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        psi = np.ascontiguousarray(self.psi, dtype=np.complex128)
        if psi.shape != self.grid.shape:
            raise ValueError(f"amplitude shape {psi.shape} != grid shape {self.grid.shape}")
        psi.flags.writeable = False
        object.__setattr__(self, "psi", psi)
        if abs(self.norm() - 1.0) > 1e-9:
            raise ValueError(f"wavefunction not normalized: norm={self.norm()!r}")

    @classmethod
    def normalized(cls, grid: Grid, psi: np.ndarray, mass: float = 1.0, hbar: float = 1.0) -> "WaveFunction":
        psi = np.asarray(psi, dtype=np.complex128)
        nrm = math.sqrt(float(np.sum(np.abs(psi) ** 2)) * grid.cell_volume)
        if nrm == 0.0:
            raise DestructiveAnnihilationError("cannot normalize a zero wavefunction")
        return cls(grid, psi / nrm, mass=mass, hbar=hbar)

    def norm(self) -> float:
        return math.sqrt(float(np.sum(np.abs(self.psi) ** 2)) * self.grid.cell_volume)

    def density(self) -> np.ndarray:
        return np.abs(self.psi) ** 2

    def inner(self, other: "WaveFunction") -> complex:
        if other.grid != self.grid:
            raise GridMismatchError("inner product across different grids")
        return complex(np.vdot(self.psi, other.psi) * self.grid.cell_volume)

    def with_psi(self, psi: np.ndarray) -> "WaveFunction":
        return WaveFunction(self.grid, psi, mass=self.mass, hbar=self.hbar)


# --- potentials -------------------------------------------------------------


@dataclass(frozen=True)
class FreePotential:
    """V = 0 everywhere."""

    def values(self, grid: Grid) -> np.ndarray:
        return np.zeros(grid.shape)


@dataclass(frozen=True)
class HarmonicPotential:
    """V = m omega^2 |x - center|^2 / 2 (mass supplied at propagation time)."""

    omega: float
    center: tuple[float, ...] = (0.0,)

    def values(self, grid: Grid, mass: float = 1.0) -> np.ndarray:
        coords = grid.meshgrid()
        r2 = sum((c - c0) ** 2 for c, c0 in zip(coords, self.center))
        return 0.5 * mass * self.omega**2 * r2


@dataclass(frozen=True)
class SlitMaskPotential:
    """Hard double-slit mask: a finite barrier wall with two openings.

    The wall occupies a slab of given thickness on the last axis; two slit
    openings of width ``slit_width`` are centred at ``slit_centers`` on the
    first axis.
    """

    height: float
    wall_position: float
    wall_thickness: float
    slit_centers: tuple[float, float]
    slit_width: float

    def values(self, grid: Grid) -> np.ndarray:
        coords = grid.meshgrid()
        across = coords[0]
        along = coords[-1]
        in_wall = np.abs(along - self.wall_position) <= self.wall_thickness / 2
        open_mask = np.zeros_like(across, dtype=bool)
        for c in self.slit_centers:
            open_mask |= np.abs(across - c) <= self.slit_width / 2
        v = np.where(in_wall & ~open_mask, self.height, 0.0)
        return v


Potential = FreePotential | HarmonicPotential | SlitMaskPotential


def _potential_values(V: Potential, grid: Grid, mass: float) -> np.ndarray:
    if isinstance(V, HarmonicPotential):
        return V.values(grid, mass=mass)
    return V.values(grid)


# --- construction -----------------------------------------------------------


def make_gaussian_packet(
    grid: Grid,
    center,
    width,
    wavevector,
    mass: float = 1.0,
    hbar: float = 1.0,
) -> WaveFunction:
    """Normalized Gaussian packet exp(-|x-c|^2 / 4 sigma^2) * exp(i k.x).

    With this width convention the position density |psi|^2 has standard
    deviation ``width`` per axis, and a free packet spreads as
    sigma(t) = sigma0 * sqrt(1 + (hbar t / 2 m sigma0^2)^2).
    """
    center = np.atleast_1d(np.asarray(center, dtype=float))
    wavevector = np.atleast_1d(np.asarray(wavevector, dtype=float))
    width = np.broadcast_to(np.atleast_1d(np.asarray(width, dtype=float)), (grid.dims,))
    if center.shape != (grid.dims,) or wavevector.shape != (grid.dims,):
        raise ValueError("center and wavevector must match grid dimensionality")
    for a in range(grid.dims):
        if width[a] < 4.0 * grid.spacing[a]:
            raise WidthTooSmallError(
                f"axis {a}: width {width[a]} < 4 * spacing {grid.spacing[a]} (aliasing risk)"
            )
    coords = grid.meshgrid()
    envelope = np.zeros(grid.shape)
    phase = np.zeros(grid.shape)
    for a in range(grid.dims):
        envelope = envelope - (coords[a] - center[a]) ** 2 / (4.0 * width[a] ** 2)
        phase = phase + wavevector[a] * coords[a]
    psi = np.exp(envelope) * np.exp(1j * phase)
    wf = WaveFunction.normalized(grid, psi, mass=mass, hbar=hbar)
    _check_boundary(wf)
    return wf


def _check_boundary(wf: WaveFunction) -> None:
    amp = np.abs(wf.psi)
    for a in range(wf.grid.dims):
        edge = max(float(np.max(np.take(amp, 0, axis=a))), float(np.max(np.take(amp, -1, axis=a))))
        if edge >= BOUNDARY_GUARD:
            raise PacketTouchesBoundaryError(
                f"axis {a}: boundary amplitude {edge:.3e} >= {BOUNDARY_GUARD}"
            )


def superpose(a: WaveFunction, b: WaveFunction, weights: tuple[complex, complex]) -> WaveFunction:
    """Renormalized linear combination w0*a + w1*b on a shared grid."""
    if a.grid != b.grid:
        raise GridMismatchError("superpose requires a common grid")
    w0, w1 = weights
    psi = w0 * a.psi + w1 * b.psi
    nrm2 = float(np.sum(np.abs(psi) ** 2)) * a.grid.cell_volume
    if nrm2 <= 1e-12:  # norm <= 1e-6
        raise DestructiveAnnihilationError(f"superposition norm {math.sqrt(nrm2):.3e} <= 1e-6")
    return WaveFunction(a.grid, psi / math.sqrt(nrm2), mass=a.mass, hbar=a.hbar)


# --- propagation ------------------------------------------------------------


def _kinetic_phase(wf: WaveFunction, dt: float) -> np.ndarray:
    grid = wf.grid
    k2 = np.zeros(grid.shape)
    for a in range(grid.dims):
        ka = grid.wavenumbers(a)
        shape = [1] * grid.dims
        shape[a] = grid.shape[a]
        k2 = k2 + ka.reshape(shape) ** 2
    return np.exp(-1j * wf.hbar * k2 * dt / (2.0 * wf.mass))


def check_stability(wf: WaveFunction, V: Potential, dt: float) -> None:
    """Reject steps whose Nyquist-mode phase advance exceeds the documented bound.

    Free evolution is diagonal in momentum space and exact for any dt, so the
    bound only constrains runs with a non-trivial potential, where the
    splitting error is governed by the per-step phase advance.
    """
    if isinstance(V, FreePotential):
        return
    grid = wf.grid
    kmax2 = sum((np.pi / grid.spacing[a]) ** 2 for a in range(grid.dims))
    phase = dt * (wf.hbar * kmax2 / (2.0 * wf.mass))
    vmax = float(np.max(np.abs(_potential_values(V, grid, wf.mass))))
    phase += dt * vmax / wf.hbar
    if phase > STABILITY_PHASE_BOUND:
        raise StabilityBoundError(
            f"dt={dt}: Nyquist phase advance {phase:.3f} exceeds bound {STABILITY_PHASE_BOUND:.3f}"
        )


def propagate(wf: WaveFunction, V: Potential, dt: float, steps: int) -> WaveFunction:
    """Unitary evolution under H = p^2/2m + V by Strang (order-2) splitting.

    ``steps`` applications of exp(-iV dt/2) exp(-iT dt) exp(-iV dt/2); the
    interior half-steps of V are fused.  For a free potential each step is
    exact kinetic evolution.
    """
    if steps == 0:
        return wf
    if steps < 0:
        raise ValueError("steps must be >= 0")
    check_stability(wf, V, dt)
    kin = _kinetic_phase(wf, dt)
    psi = np.array(wf.psi)
    if isinstance(V, FreePotential):
        for _ in range(steps):
            psi = np.fft.ifftn(kin * np.fft.fftn(psi))
    else:
        v = _potential_values(V, wf.grid, wf.mass)
        half = np.exp(-1j * v * dt / (2.0 * wf.hbar))
        full = half * half
        psi = half * psi
        for s in range(steps):
            psi = np.fft.ifftn(kin * np.fft.fftn(psi))
            psi = (half if s == steps - 1 else full) * psi
    return wf.with_psi(psi)


# --- phase gradient ---------------------------------------------------------


@dataclass(frozen=True)
class VectorField:
    """Real vector field sampled on a grid, with an explicit defined-mask.

    ``values`` has shape grid.shape + (dims,); undefined points hold NaN and
    are flagged False in ``defined``.
    """

    grid: Grid
    values: np.ndarray
    defined: np.ndarray


def spectral_gradient(grid: Grid, f: np.ndarray) -> np.ndarray:
    """Gradient of a complex grid function via FFT; shape grid.shape + (dims,)."""
    out = np.empty(grid.shape + (grid.dims,), dtype=np.complex128)
    F = np.fft.fftn(f)
    for a in range(grid.dims):
        ka = grid.wavenumbers(a)
        shape = [1] * grid.dims
        shape[a] = grid.shape[a]
        out[..., a] = np.fft.ifftn(1j * ka.reshape(shape) * F)
    return out


def phase_gradient(wf: WaveFunction, cutoff_fraction: float = DENSITY_CUTOFF_FRACTION) -> VectorField:
    """grad S = Im(grad psi / psi), computed spectrally.

    Points with |psi|^2 below ``cutoff_fraction`` of the maximum are flagged
    undefined (NaN), never silently zero.
    """
    rho = wf.density()
    defined = rho > cutoff_fraction * float(rho.max())
    grad = spectral_gradient(wf.grid, wf.psi)
    with np.errstate(invalid="ignore", divide="ignore"):
        gs = np.imag(grad / wf.psi[..., None])
    gs[~defined] = np.nan
    return VectorField(wf.grid, gs, defined)


def expectation_energy(wf: WaveFunction, V: Potential) -> float:
    """<H> for H = p^2/2m + V, kinetic part evaluated spectrally."""
    grid = wf.grid
    F = np.fft.fftn(wf.psi)
    k2 = np.zeros(grid.shape)
    for a in range(grid.dims):
        ka = grid.wavenumbers(a)
        shape = [1] * grid.dims
        shape[a] = grid.shape[a]
        k2 = k2 + ka.reshape(shape) ** 2
    # Parseval: sum over modes of |F|^2 k^2, normalized like the grid sum
    npts = float(np.prod(grid.shape))
    kinetic = wf.hbar**2 / (2.0 * wf.mass) * float(np.sum(k2 * np.abs(F) ** 2)) / npts * grid.cell_volume
    pot = float(np.sum(_potential_values(V, grid, wf.mass) * wf.density())) * grid.cell_volume
    return kinetic + pot
