"""End-to-end weak velocity measurement protocol.

A Gaussian pointer is coupled to the particle position (von Neumann scheme),
the compound system evolves freely for a delay, a strong position measurement
post-selects sub-ensembles, and the conditional pointer mean per outcome bin
yields weak position values.  Extrapolating (X - E[y|X])/delay to zero delay
gives the operationally defined velocity field.  The comparison of the weak
value against the actual earlier particle position of a matched trajectory
ensemble (the correspondence check) is what separates the standard guidance
law from its divergence-free modifications.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import (
    STATUS_OK,
    DynamicsLaw,
    Ensemble,
    Modified,
    Standard,
    WavefunctionHistory,
    integrate_ensemble,
    law_label,
)
from .errors import GridOverflowError, NonlinearityError, UnmatchedEnsembleError
from .fields import ConstantField, DivergenceFreeField
from .grid import (
    BOUNDARY_GUARD,
    DENSITY_CUTOFF_FRACTION,
    Grid,
    WaveFunction,
    phase_gradient,
)
from .sampling import sample_from_density_2d
from .stats import bootstrap_se

#: Pointer spread must be at least this many system-grid spacings (weak regime).
MIN_SIGMA_SPACINGS = 8.0

#: Default minimum bin population before a Monte-Carlo bin is trusted.
MIN_BIN_POPULATION = 200

#: Default post-selection delay ladder used for the zero-delay extrapolation.
TAU_LADDER = (0.025, 0.05, 0.1, 0.2)

#: Linear-fit residual (per unit velocity) above which extrapolation is rejected.
NONLINEARITY_THRESHOLD = 0.05


@dataclass(frozen=True)
class PointerModel:
    """Gaussian pointer exp(-y^2/4 sigma^2) on its own 1D grid."""

    sigma: float
    grid: Grid

    def __post_init__(self):
        if self.grid.dims != 1:
            raise ValueError("pointer grid must be 1D")

    def amplitudes(self) -> np.ndarray:
        y = self.grid.axis(0)
        phi = np.exp(-(y**2) / (4.0 * self.sigma**2))
        nrm = math.sqrt(float(np.sum(phi**2)) * self.grid.cell_volume)
        return phi / nrm


@dataclass(frozen=True)
class CompoundState:
    """Particle (x) + pointer (y) wavefunction on the product grid."""

    grid: Grid  # 2D: axis 0 = system x, axis 1 = pointer y
    psi: np.ndarray
    time: float
    mass: float
    hbar: float

    def __post_init__(self):
        psi = np.ascontiguousarray(self.psi, dtype=np.complex128)
        psi.flags.writeable = False
        object.__setattr__(self, "psi", psi)
        if abs(self.norm() - 1.0) > 1e-9:
            raise ValueError(f"compound state not normalized: {self.norm()!r}")

    def norm(self) -> float:
        return math.sqrt(float(np.sum(np.abs(self.psi) ** 2)) * self.grid.cell_volume)

    def density(self) -> np.ndarray:
        return np.abs(self.psi) ** 2


def couple(wf: WaveFunction, pointer: PointerModel) -> CompoundState:
    """Entangled post-interaction state Psi(x, y, 0) = psi(x) phi(y - x)."""
    if wf.grid.dims != 1:
        raise ValueError("weak protocol couples a 1D system state")
    if pointer.sigma < MIN_SIGMA_SPACINGS * wf.grid.spacing[0]:
        raise ValueError(
            f"pointer sigma {pointer.sigma} below weak regime "
            f"({MIN_SIGMA_SPACINGS} system spacings)"
        )
    x = wf.grid.axis(0)
    y = pointer.grid.axis(0)
    phi = np.exp(-((y[None, :] - x[:, None]) ** 2) / (4.0 * pointer.sigma**2))
    psi = wf.psi[:, None] * phi
    grid2 = Grid((wf.grid.extents[0], pointer.grid.extents[0]), (wf.grid.shape[0], pointer.grid.shape[0]))
    nrm = math.sqrt(float(np.sum(np.abs(psi) ** 2)) * grid2.cell_volume)
    psi = psi / nrm
    amp = np.abs(psi)
    edge = max(float(amp[:, 0].max()), float(amp[:, -1].max()))
    if edge >= 1e3 * BOUNDARY_GUARD:
        raise GridOverflowError(f"pointer grid too small: boundary amplitude {edge:.3e}")
    return CompoundState(grid2, psi, 0.0, wf.mass, wf.hbar)


def evolve_compound(state: CompoundState, tau: float) -> CompoundState:
    """Free kinetic evolution acting on the system axis only; exact in one step."""
    if tau < 0:
        raise ValueError("tau must be >= 0")
    if tau == 0:
        return state
    kx = state.grid.wavenumbers(0)
    phase = np.exp(-1j * state.hbar * kx**2 * tau / (2.0 * state.mass))
    psi = np.fft.ifft(phase[:, None] * np.fft.fft(state.psi, axis=0), axis=0)
    return CompoundState(state.grid, psi, state.time + tau, state.mass, state.hbar)


def compound_history(
    state: CompoundState,
    tau: float,
    n_snapshots: int = 9,
    cutoff_fraction: float = DENSITY_CUTOFF_FRACTION,
) -> WavefunctionHistory:
    """Guidance tables for the compound evolution on [0, tau].

    The pointer coordinate carries no kinetic term, so its guidance velocity
    is structurally zero; the system velocity is the phase gradient of the
    compound state along x at fixed y.
    """
    grid = state.grid
    times = np.linspace(0.0, tau, n_snapshots)
    shape = (n_snapshots, grid.dims) + grid.shape
    vel = np.zeros(shape)
    osm = np.zeros(shape)
    rho = np.empty((n_snapshots,) + grid.shape)
    kx = grid.wavenumbers(0)
    for s, t in enumerate(times):
        st = evolve_compound(state, float(t))
        d = st.density()
        rho[s] = d
        defined = d > cutoff_fraction * float(d.max())
        gx = np.fft.ifft(1j * kx[:, None] * np.fft.fft(st.psi, axis=0), axis=0)
        with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
            vx = (state.hbar / state.mass) * np.imag(gx / st.psi)
        vx[~defined] = np.nan
        vel[s, 0] = vx
    return WavefunctionHistory(grid, times, vel, osm, rho, state.mass, state.hbar)


@dataclass(frozen=True)
class PointerScaledDriftField(DivergenceFreeField):
    """Divergence-free drift (c * m(y), 0) on the compound (x, y) grid.

    m(y) is the pointer marginal of the compound density, which is invariant
    under the x-only kinetic evolution; dividing by the full compound density
    then yields the 1D drift c / rho(x | y), the compound realization of a
    constant divergence-free modification of the particle's law.
    """

    strength: float = 0.0
    y_axis: np.ndarray | None = None
    y_marginal: np.ndarray | None = None

    def values(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        m = np.interp(points[:, 1], self.y_axis, self.y_marginal)
        out = np.zeros_like(points)
        out[:, 0] = self.strength * m
        return out


def modified_compound_law(strength: float, history: WavefunctionHistory) -> Modified:
    """Constant-drift modified guidance for the compound system."""
    grid = history.grid
    m_y = history.rho[0].sum(axis=0) * grid.spacing[0]
    return Modified(PointerScaledDriftField(strength=strength, y_axis=grid.axis(1), y_marginal=m_y))


# --- weak runs --------------------------------------------------------------


@dataclass
class WeakRun:
    """Post-selected conditional pointer statistics for one delay."""

    tau: float
    mode: str  # "analytic" | "monte-carlo"
    bin_edges: np.ndarray
    probe: np.ndarray  # zero-delay-density-weighted bin centers
    centers: np.ndarray  # conditional-density-weighted X_tau per bin
    population: np.ndarray
    e_y: np.ndarray  # E(y | X_tau in bin)
    se_y: np.ndarray
    re_weak_value: np.ndarray
    im_weak_value: np.ndarray
    low_stat: np.ndarray
    law: str | None = None
    seed: int | None = None
    mean_x0: np.ndarray | None = None
    se_x0: np.ndarray | None = None
    ensemble: Ensemble | None = None
    n_failed: int = 0


def _make_edges(wf: WaveFunction, bins, support_fraction: float = 1e-4):
    """Bin edges over the region where |psi|^2 exceeds ``support_fraction`` of max."""
    if not isinstance(bins, int):
        edges = np.asarray(bins, dtype=float)
    else:
        rho = wf.density()
        x = wf.grid.axis(0)
        sel = np.nonzero(rho > support_fraction * float(rho.max()))[0]
        edges = np.linspace(x[sel[0]], x[sel[-1]], bins + 1)
    if np.min(np.diff(edges)) < 2.0 * wf.grid.spacing[0] - 1e-12:
        raise ValueError("bin width must be >= 2 system-grid spacings")
    return edges


def _weak_value_field(wf: WaveFunction, tau: float) -> np.ndarray:
    """Complex weak position value (U x psi)(X) / (U psi)(X) on the grid."""
    grid = wf.grid
    k = grid.wavenumbers(0)
    phase = np.exp(-1j * wf.hbar * k**2 * tau / (2.0 * wf.mass))
    x = grid.axis(0)
    num = np.fft.ifft(phase * np.fft.fft(x * wf.psi))
    den = np.fft.ifft(phase * np.fft.fft(np.asarray(wf.psi)))
    with np.errstate(invalid="ignore", divide="ignore"):
        return num / den


def _bin_average(x, weights, values, edges):
    """Weighted mean of ``values`` per bin; returns (mass, mean) arrays."""
    idx = np.digitize(x, edges) - 1
    nb = edges.size - 1
    ok = (idx >= 0) & (idx < nb)
    mass = np.bincount(idx[ok], weights=weights[ok], minlength=nb)
    num = np.bincount(idx[ok], weights=(weights * values)[ok], minlength=nb)
    with np.errstate(invalid="ignore", divide="ignore"):
        return mass, np.where(mass > 0, num / np.where(mass > 0, mass, 1.0), np.nan)


def weak_run_analytic(wf: WaveFunction, pointer: PointerModel, tau: float, bins=60) -> WeakRun:
    """Conditional pointer means by direct quadrature on the evolved compound state."""
    edges = _make_edges(wf, bins)
    state = evolve_compound(couple(wf, pointer), tau)
    x = state.grid.axis(0)
    y = state.grid.axis(1)
    dy = state.grid.spacing[1]
    rho = state.density()
    m0 = rho.sum(axis=1) * dy  # x-marginal at time tau
    my = (rho * y[None, :]).sum(axis=1) * dy
    with np.errstate(invalid="ignore", divide="ignore"):
        ey_col = np.where(m0 > 0, my / np.where(m0 > 0, m0, 1.0), np.nan)

    mass, e_y = _bin_average(x, m0, np.nan_to_num(ey_col), edges)
    _, centers = _bin_average(x, m0, x, edges)
    rho0 = wf.density()
    _, probe = _bin_average(x, rho0, x, edges)
    wv = _weak_value_field(wf, tau)
    _, re_wv = _bin_average(x, m0, np.nan_to_num(np.real(wv)), edges)
    _, im_wv = _bin_average(x, m0, np.nan_to_num(np.imag(wv)), edges)
    nb = edges.size - 1
    return WeakRun(
        tau=tau,
        mode="analytic",
        bin_edges=edges,
        probe=probe,
        centers=centers,
        population=mass,
        e_y=e_y,
        se_y=np.zeros(nb),
        re_weak_value=re_wv,
        im_weak_value=im_wv,
        low_stat=np.zeros(nb, dtype=bool),
    )


def weak_run_monte_carlo(
    wf: WaveFunction,
    pointer: PointerModel,
    law: DynamicsLaw,
    tau: float,
    n: int,
    seed: int,
    bins=60,
    min_bin: int = MIN_BIN_POPULATION,
    dt: float | None = None,
) -> WeakRun:
    """Sampled two-screen protocol with a matched trajectory ensemble.

    (X_tau, y) pairs are drawn from |Psi(x, y, tau)|^2 by conditional
    inverse-CDF; the particle's actual position at the weak screen is
    obtained by integrating its law-dependent trajectory backwards from the
    sampled configuration (the stored backward trajectory map).
    """
    if n < 1000:
        raise ValueError("Monte-Carlo mode needs n >= 1000")
    if not isinstance(law, (Standard, Modified)):
        raise TypeError("matched trajectories require a deterministic law")
    edges = _make_edges(wf, bins)
    state = couple(wf, pointer)
    hist = compound_history(state, tau)
    if isinstance(law, Modified) and isinstance(law.j, ConstantField):
        # lift a 1D constant drift onto the compound grid
        law = modified_compound_law(law.j.components[0], hist)
    rho_tau = hist.rho[-1]
    grid2 = state.grid
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    u = rng.random((n, 2))
    samples = sample_from_density_2d(grid2.axis(0), grid2.axis(1), rho_tau, u)
    if dt is None:
        dt = tau / 40.0
    ens, _ = integrate_ensemble(law, hist, samples, tau, 0.0, dt, base_seed=seed)
    ok = ens.ok_mask()
    x_tau = samples[:, 0]
    y_ptr = samples[:, 1]
    x0 = ens.positions[:, 0, 0]  # earliest time after reversal

    nb = edges.size - 1
    idx = np.digitize(x_tau, edges) - 1
    population = np.bincount(idx[(idx >= 0) & (idx < nb)], minlength=nb)
    e_y = np.full(nb, np.nan)
    se_y = np.full(nb, np.nan)
    mean_x0 = np.full(nb, np.nan)
    se_x0 = np.full(nb, np.nan)
    centers = np.full(nb, np.nan)
    for b in range(nb):
        sel = (idx == b) & ok
        if not np.any(sel):
            continue
        e_y[b] = float(np.mean(y_ptr[sel]))
        mean_x0[b] = float(np.mean(x0[sel]))
        centers[b] = float(np.mean(x_tau[sel]))
        if np.count_nonzero(sel) >= 10:
            se_y[b] = bootstrap_se(y_ptr[sel], seed=seed * 1000 + b)
            se_x0[b] = bootstrap_se(x0[sel], seed=seed * 1000 + 500 + b)
    low_stat = population < min_bin

    rho0 = wf.density()
    x = wf.grid.axis(0)
    _, probe = _bin_average(x, rho0, x, edges)
    wv = _weak_value_field(wf, tau)
    m0 = rho_tau.sum(axis=1) * grid2.spacing[1]
    _, re_wv = _bin_average(x, m0, np.nan_to_num(np.real(wv)), edges)
    _, im_wv = _bin_average(x, m0, np.nan_to_num(np.imag(wv)), edges)
    return WeakRun(
        tau=tau,
        mode="monte-carlo",
        bin_edges=edges,
        probe=probe,
        centers=centers,
        population=population.astype(float),
        e_y=e_y,
        se_y=se_y,
        re_weak_value=re_wv,
        im_weak_value=im_wv,
        low_stat=low_stat,
        law=law_label(law),
        seed=int(seed),
        mean_x0=mean_x0,
        se_x0=se_x0,
        ensemble=ens,
        n_failed=int(np.count_nonzero(~ok)),
    )


# --- operational velocity ---------------------------------------------------


@dataclass
class OperationalVelocityField:
    probe: np.ndarray
    velocity: np.ndarray
    se: np.ndarray
    taus: np.ndarray
    residual: np.ndarray
    defined: np.ndarray


def operational_velocity(runs: list[WeakRun], max_residual: float = NONLINEARITY_THRESHOLD) -> OperationalVelocityField:
    """Zero-delay extrapolation of (X_tau - E[y|X_tau]) / tau per probe point.

    Runs must share bin edges; a straight line in tau is fitted and its
    intercept reported, with the RMS fit residual as a diagnostic.
    """
    if len(runs) < 3:
        raise ValueError("need at least 3 distinct delays")
    taus = np.array([r.tau for r in runs])
    if np.unique(taus).size != taus.size:
        raise ValueError("delays must be distinct")
    edges = runs[0].bin_edges
    for r in runs[1:]:
        if not np.array_equal(r.bin_edges, edges):
            raise ValueError("runs must share post-selection bins")
    nb = edges.size - 1
    v = np.stack([(r.centers - r.e_y) / r.tau for r in runs])  # (ntau, nb)
    usable = np.stack([~r.low_stat & np.isfinite(r.e_y) for r in runs]).all(axis=0)
    A = np.stack([np.ones_like(taus), taus], axis=1)
    coef, *_ = np.linalg.lstsq(A, np.where(np.isfinite(v), v, 0.0), rcond=None)
    fit = A @ coef
    residual = np.sqrt(np.nanmean((v - fit) ** 2, axis=0))
    # intercept standard error from per-run bin SEs through the fit weights
    pinv = np.linalg.pinv(A)  # (2, ntau)
    se_runs = np.stack([np.where(np.isfinite(r.se_y), r.se_y, 0.0) / r.tau for r in runs])
    se = np.sqrt((pinv[0][:, None] ** 2 * se_runs**2).sum(axis=0))
    velocity = coef[0]
    velocity[~usable] = np.nan
    if np.any(residual[usable] > max_residual):
        worst = float(np.nanmax(residual[usable]))
        raise NonlinearityError(f"fit residual {worst:.3e} above {max_residual}")
    return OperationalVelocityField(
        probe=runs[0].probe,
        velocity=velocity,
        se=se,
        taus=taus,
        residual=residual,
        defined=usable,
    )


def guidance_reference(wf: WaveFunction, probe: np.ndarray) -> np.ndarray:
    """(hbar/m) * grad S of the input state, interpolated at the probe points."""
    pg = phase_gradient(wf)
    x = wf.grid.axis(0)
    vals = pg.values[:, 0]
    out = np.interp(probe, x, np.nan_to_num(vals))
    return out


# --- correspondence check ---------------------------------------------------


@dataclass
class CORReport:
    """Per-bin gap between the weak value and the mean actual earlier position."""

    tau: float
    law: str
    probe: np.ndarray
    population: np.ndarray
    delta: np.ndarray
    se: np.ndarray
    zscore: np.ndarray
    usable: np.ndarray

    def null_fraction(self, z: float = 3.0) -> float:
        """Fraction of usable bins whose gap is within z standard errors."""
        use = self.usable
        if not np.any(use):
            return float("nan")
        return float(np.mean(np.abs(self.zscore[use]) <= z))

    def exceed_fraction(self, z: float = 3.0) -> float:
        use = self.usable
        if not np.any(use):
            return float("nan")
        return float(np.mean(np.abs(self.zscore[use]) > z))


def cor_test(run: WeakRun) -> CORReport:
    """Compare E(y | X_tau) with the matched ensemble's mean actual x(0) per bin."""
    if run.mean_x0 is None or run.ensemble is None:
        raise UnmatchedEnsembleError("weak run carries no matched trajectory ensemble")
    delta = run.e_y - run.mean_x0
    se = np.sqrt(np.nan_to_num(run.se_y) ** 2 + np.nan_to_num(run.se_x0) ** 2)
    with np.errstate(invalid="ignore", divide="ignore"):
        z = np.where(se > 0, delta / se, np.nan)
    usable = ~run.low_stat & np.isfinite(delta) & np.isfinite(z)
    return CORReport(
        tau=run.tau,
        law=run.law or "?",
        probe=run.probe,
        population=run.population,
        delta=delta,
        se=se,
        zscore=z,
        usable=usable,
    )
