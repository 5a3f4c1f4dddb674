"""Particle dynamics: guidance laws, trajectory integration, ensembles.

The family of laws all reproduce the same position statistics: the standard
phase-gradient guidance, additive divergence-free modifications, i.i.d.
Born-rule resampling (a dynamics with no velocities at all), and a
Nelson-style diffusion.  Trajectories are integrated against a stored
sequence of wavefunction snapshots, interpolating velocities bilinearly in
space and linearly in time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import (
    ConfigError,
    LeftSupportError,
    SingularityHitError,
    UndefinedAtNodeError,
)
from .fields import DivergenceFreeField
from .grid import (
    DENSITY_CUTOFF_FRACTION,
    Grid,
    Potential,
    WaveFunction,
    phase_gradient,
    propagate,
    spectral_gradient,
)
from .sampling import member_rng, sample_from_density_1d, sample_from_density_2d

#: A trajectory is declared left-support only after this many consecutive
#: undefined velocity evaluations (tolerates interpolation jitter).
STRIKE_LIMIT = 3

#: Singularity exclusion radius, in units of the largest grid spacing.
SINGULARITY_RADIUS_FACTOR = 2.0

#: A single step displacing a member by more than this many grid spacings
#: means the velocity field is not resolved at the current step size; the
#: member is retired rather than allowed to contaminate ensemble statistics.
RUNAWAY_SPACINGS = 50.0

#: Documented per-trajectory integration tolerance of the RK4 stepping at the
#: default step sizes; used as the yardstick for "trajectories clearly differ".
INTEGRATION_TOL = 1e-3

STATUS_OK = 0
STATUS_LEFT_SUPPORT = 1
STATUS_SINGULARITY = 2

STATUS_LABELS = {STATUS_OK: "ok", STATUS_LEFT_SUPPORT: "left-support", STATUS_SINGULARITY: "singularity-hit"}


# --- laws -------------------------------------------------------------------


@dataclass(frozen=True)
class Standard:
    """v = (hbar/m) * grad S."""


@dataclass(frozen=True)
class Modified:
    """Standard guidance plus j/|psi|^2 for a divergence-free j."""

    j: DivergenceFreeField


@dataclass(frozen=True)
class BornResampling:
    """Position redrawn i.i.d. from |psi_t|^2 every ``resample_dt``; no velocities."""

    resample_dt: float

    def __post_init__(self):
        if self.resample_dt <= 0:
            raise ValueError("resample_dt must be > 0")


@dataclass(frozen=True)
class NelsonDiffusion:
    """Diffusion with drift v + nu * grad ln|psi|^2 and variance 2 nu dt.

    The customary diffusivity choice nu = hbar/2m makes the process
    equivalent in law to the quantum position process; pass it explicitly.
    """

    nu: float

    def __post_init__(self):
        if self.nu <= 0:
            raise ValueError("nu must be > 0")


DynamicsLaw = Standard | Modified | BornResampling | NelsonDiffusion


def law_label(law: DynamicsLaw) -> str:
    if isinstance(law, Standard):
        return "standard"
    if isinstance(law, Modified):
        return "modified"
    if isinstance(law, BornResampling):
        return "born-resampling"
    if isinstance(law, NelsonDiffusion):
        return "nelson"
    raise TypeError(f"unknown law {law!r}")


# --- wavefunction history ---------------------------------------------------


class WavefunctionHistory:
    """Snapshots of an evolving wavefunction with precomputed guidance tables.

    For each snapshot we keep the density, the standard guidance velocity
    (NaN below the density cutoff) and Re(grad psi / psi) for diffusion
    drifts.  Tables are laid out (snapshot, axis, grid...) so per-axis slices
    are contiguous for the interpolation kernels.
    """

    def __init__(self, grid: Grid, times, vel, osm, rho, mass: float, hbar: float, psis=None):
        self.grid = grid
        self.times = np.asarray(times, dtype=float)
        self.vel = vel
        self.osm = osm
        self.rho = rho
        self.mass = mass
        self.hbar = hbar
        self.psis = psis

    @classmethod
    def evolve(
        cls,
        wf: WaveFunction,
        V: Potential,
        t_final: float,
        dt_snap: float,
        substeps: int = 1,
        t0: float = 0.0,
        keep_psi: bool = False,
        cutoff_fraction: float = DENSITY_CUTOFF_FRACTION,
    ) -> "WavefunctionHistory":
        n_snap = round((t_final - t0) / dt_snap)
        if not math.isclose(t0 + n_snap * dt_snap, t_final, rel_tol=0, abs_tol=1e-9):
            raise ValueError("dt_snap must divide t_final - t0")
        grid = wf.grid
        times = t0 + dt_snap * np.arange(n_snap + 1)
        shape = (n_snap + 1, grid.dims) + grid.shape
        vel = np.empty(shape)
        osm = np.empty(shape)
        rho = np.empty((n_snap + 1,) + grid.shape)
        psis = [] if keep_psi else None
        cur = wf
        for s in range(n_snap + 1):
            if s > 0:
                cur = propagate(cur, V, dt_snap / substeps, substeps)
            cls._fill_tables(cur, s, vel, osm, rho, cutoff_fraction)
            if psis is not None:
                psis.append(cur)
        return cls(grid, times, vel, osm, rho, wf.mass, wf.hbar, psis)

    @staticmethod
    def _fill_tables(wf: WaveFunction, s: int, vel, osm, rho, cutoff_fraction: float) -> None:
        grid = wf.grid
        d = wf.density()
        rho[s] = d
        defined = d > cutoff_fraction * float(d.max())
        grad = spectral_gradient(grid, wf.psi)
        with np.errstate(invalid="ignore", divide="ignore"):
            ratio = grad / wf.psi[..., None]
        for a in range(grid.dims):
            va = (wf.hbar / wf.mass) * np.imag(ratio[..., a])
            oa = np.real(ratio[..., a])
            va[~defined] = np.nan
            oa[~defined] = np.nan
            vel[s, a] = va
            osm[s, a] = oa

    # -- lookups ------------------------------------------------------------

    def _bracket(self, t: float) -> tuple[int, float]:
        times = self.times
        if times.size == 1:
            return 0, 0.0
        i = int(np.clip(np.searchsorted(times, t, side="right") - 1, 0, times.size - 2))
        wt = (t - times[i]) / (times[i + 1] - times[i])
        return i, float(np.clip(wt, 0.0, 1.0))

    def _interp(self, table, i: int, wt: float, pos: np.ndarray) -> np.ndarray:
        """Interpolate one (snapshot, axis) table pair at positions (m, dims)."""
        grid = self.grid
        i2 = min(i + 1, self.times.size - 1)
        if grid.dims == 1:
            return _kernels.interp_time_1d(
                table[i], table[i2], wt, grid.extents[0][0], 1.0 / grid.spacing[0],
                np.ascontiguousarray(pos[:, 0]),
            )
        return _kernels.interp_time_2d(
            table[i], table[i2], wt,
            grid.extents[0][0], grid.extents[1][0],
            1.0 / grid.spacing[0], 1.0 / grid.spacing[1],
            np.ascontiguousarray(pos[:, 0]), np.ascontiguousarray(pos[:, 1]),
        )

    def velocity_batch(self, pos: np.ndarray, t: float, law: DynamicsLaw) -> np.ndarray:
        """Law velocity (or diffusion drift) at positions (m, dims); NaN if undefined."""
        pos = np.atleast_2d(np.asarray(pos, dtype=float))
        i, wt = self._bracket(t)
        out = np.empty_like(pos)
        for a in range(self.grid.dims):
            out[:, a] = self._interp(self.vel[:, a], i, wt, pos)
        if isinstance(law, Standard):
            return out
        if isinstance(law, NelsonDiffusion):
            for a in range(self.grid.dims):
                out[:, a] += 2.0 * law.nu * self._interp(self.osm[:, a], i, wt, pos)
            return out
        if isinstance(law, Modified):
            rho = self._interp(self.rho, i, wt, pos)
            jv = law.j.values(pos)
            with np.errstate(invalid="ignore", divide="ignore"):
                out += jv / rho[:, None]
            eps = SINGULARITY_RADIUS_FACTOR * max(self.grid.spacing)
            out[law.j.singular_mask(pos, min_radius=eps)] = np.nan
            return out
        raise TypeError(f"no velocity field for law {law_label(law)!r}")

    def density_batch(self, pos: np.ndarray, t: float) -> np.ndarray:
        pos = np.atleast_2d(np.asarray(pos, dtype=float))
        i, wt = self._bracket(t)
        return self._interp(self.rho, i, wt, pos)

    def density_at_time(self, t: float) -> np.ndarray:
        """Tabulated density at the snapshot nearest to t."""
        i = int(np.argmin(np.abs(self.times - t)))
        return self.rho[i]

    def wavefunction(self, t: float) -> WaveFunction:
        if self.psis is None:
            raise ValueError("history was built with keep_psi=False")
        i = int(np.argmin(np.abs(self.times - t)))
        return self.psis[i]


# --- trajectories and ensembles --------------------------------------------


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    positions: np.ndarray  # (T, dims)
    law: str
    seed: int
    status: int = STATUS_OK

    def __post_init__(self):
        if np.any(np.diff(self.times) <= 0) and self.times.size > 1:
            raise ValueError("times must be strictly increasing")


@dataclass
class Ensemble:
    """Array-backed collection of trajectories sharing times and a base seed."""

    times: np.ndarray  # (T,)
    positions: np.ndarray  # (m, T, dims)
    status: np.ndarray  # (m,) int
    law: str
    base_seed: int

    @property
    def size(self) -> int:
        return self.positions.shape[0]

    @property
    def dims(self) -> int:
        return self.positions.shape[2]

    def trajectory(self, i: int) -> Trajectory:
        return Trajectory(self.times, self.positions[i], self.law, self.base_seed, int(self.status[i]))

    def ok_mask(self) -> np.ndarray:
        return self.status == STATUS_OK

    def final_positions(self) -> np.ndarray:
        return self.positions[:, -1, :]

    def error_indices(self) -> dict[str, list[int]]:
        out: dict[str, list[int]] = {}
        for code, label in STATUS_LABELS.items():
            if code == STATUS_OK:
                continue
            idx = np.nonzero(self.status == code)[0]
            if idx.size:
                out[label] = idx.tolist()
        return out


def sample_initial(wf: WaveFunction, n: int, seed: int) -> Ensemble:
    """n i.i.d. draws from |psi|^2 by inverse-CDF; deterministic given seed."""
    if n < 0:
        raise ValueError("n must be >= 0")
    grid = wf.grid
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    u = rng.random((n, grid.dims))
    rho = wf.density()
    if grid.dims == 1:
        pos = sample_from_density_1d(grid.axis(0), rho, u[:, 0])[:, None]
    else:
        pos = sample_from_density_2d(grid.axis(0), grid.axis(1), rho, u)
    return Ensemble(
        times=np.zeros(1),
        positions=pos[:, None, :],
        status=np.zeros(n, dtype=np.int8),
        law="initial",
        base_seed=int(seed),
    )


@dataclass
class ScreenPlane:
    """Crossing detector: plane {x_axis = position}, crossed in the + direction."""

    axis: int
    position: float


@dataclass
class ScreenRecord:
    crossed: np.ndarray  # (m,) bool
    positions: np.ndarray  # (m, dims) crossing point, NaN if never crossed
    times: np.ndarray  # (m,)


class _Integrator:
    """Shared bookkeeping for the stepping loops (strikes, screens, records)."""

    def __init__(self, m: int, dims: int, screen: ScreenPlane | None):
        self.active = np.ones(m, dtype=bool)
        self.status = np.zeros(m, dtype=np.int8)
        self.strikes = np.zeros(m, dtype=np.int8)
        self.screen = screen
        if screen is not None:
            self.crossed = np.zeros(m, dtype=bool)
            self.cross_pos = np.full((m, dims), np.nan)
            self.cross_t = np.full(m, np.nan)

    def check_screen(self, prev: np.ndarray, cur: np.ndarray, t_prev: float, t_cur: float) -> None:
        if self.screen is None:
            return
        a, sp = self.screen.axis, self.screen.position
        new = self.active & ~self.crossed & (cur[:, a] >= sp) & (prev[:, a] < sp)
        if not np.any(new):
            return
        denom = cur[new, a] - prev[new, a]
        f = np.where(denom != 0, (sp - prev[new, a]) / denom, 1.0)
        self.cross_pos[new] = prev[new] + f[:, None] * (cur[new] - prev[new])
        self.cross_t[new] = t_prev + f * (t_cur - t_prev)
        self.crossed[new] = True

    def apply_strikes(
        self, pos: np.ndarray, newpos: np.ndarray, max_step: float = np.inf
    ) -> np.ndarray:
        """Accept defined steps, hold position through strikes, retire at the limit."""
        bad = self.active & np.any(np.isnan(newpos), axis=1)
        with np.errstate(invalid="ignore"):
            runaway = self.active & ~bad & (
                np.linalg.norm(newpos - pos, axis=1) > max_step
            )
        good = self.active & ~bad & ~runaway
        pos[good] = newpos[good]
        self.strikes[good] = 0
        self.strikes[bad] += 1
        retire = (bad & (self.strikes >= STRIKE_LIMIT)) | runaway
        self.status[retire] = STATUS_LEFT_SUPPORT
        self.active[retire] = False
        return pos

    def mark_singular(self, mask: np.ndarray) -> None:
        hit = self.active & mask
        self.status[hit] = STATUS_SINGULARITY
        self.active[hit] = False

    def screen_record(self, m: int, dims: int) -> ScreenRecord | None:
        if self.screen is None:
            return None
        return ScreenRecord(self.crossed, self.cross_pos, self.cross_t)


def _check_divides(span: float, dt: float) -> int:
    steps = round(abs(span) / dt)
    if steps == 0 or not math.isclose(steps * dt, abs(span), rel_tol=1e-9, abs_tol=1e-12):
        raise ValueError(f"dt={dt} does not divide the time span {span}")
    return steps


def integrate_ensemble(
    law: DynamicsLaw,
    history: WavefunctionHistory,
    x0: np.ndarray,
    t0: float,
    t1: float,
    dt: float,
    base_seed: int = 0,
    record_every: int = 1,
    screen: ScreenPlane | None = None,
) -> tuple[Ensemble, ScreenRecord | None]:
    """Integrate all ensemble members through the stored evolution.

    Deterministic laws use classic RK4 against the interpolated velocity
    field (``t1 < t0`` integrates backwards); the stochastic laws use their
    own stepping.  Members are embarrassingly independent: stochastic draws
    come from per-member counter-based streams keyed (base_seed, index).
    """
    x0 = np.atleast_2d(np.asarray(x0, dtype=float))
    m, dims = x0.shape
    if isinstance(law, BornResampling):
        return _integrate_born(law, history, x0, t0, t1, base_seed, screen)
    if isinstance(law, NelsonDiffusion):
        return _integrate_nelson(law, history, x0, t0, t1, dt, base_seed, record_every, screen)

    steps = _check_divides(t1 - t0, dt)
    h = (t1 - t0) / steps
    book = _Integrator(m, dims, screen)
    pos = x0.copy()
    rec_times = [t0]
    rec = [pos.copy()]
    sing = isinstance(law, Modified) and law.j.singularities
    eps = SINGULARITY_RADIUS_FACTOR * max(history.grid.spacing)
    max_step = RUNAWAY_SPACINGS * max(history.grid.spacing)
    if sing:
        book.mark_singular(law.j.singular_mask(pos, min_radius=eps))
    t = t0
    for s in range(steps):
        k1 = history.velocity_batch(pos, t, law)
        k2 = history.velocity_batch(pos + 0.5 * h * k1, t + 0.5 * h, law)
        k3 = history.velocity_batch(pos + 0.5 * h * k2, t + 0.5 * h, law)
        k4 = history.velocity_batch(pos + h * k3, t + h, law)
        newpos = pos + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        prev = pos.copy()
        pos = book.apply_strikes(pos, newpos, max_step)
        if sing:
            book.mark_singular(law.j.singular_mask(pos, min_radius=eps))
        t = t0 + (s + 1) * h
        book.check_screen(prev, pos, t - h, t)
        if (s + 1) % record_every == 0 or s == steps - 1:
            rec_times.append(t)
            rec.append(pos.copy())
    ens = _assemble(rec_times, rec, book, law, base_seed, t1 < t0)
    return ens, book.screen_record(m, dims)


def _assemble(rec_times, rec, book, law, base_seed, backwards: bool) -> Ensemble:
    times = np.asarray(rec_times)
    positions = np.stack(rec, axis=1)
    if backwards:
        times = times[::-1]
        positions = positions[:, ::-1, :]
    return Ensemble(times, np.ascontiguousarray(positions), book.status, law_label(law), int(base_seed))


def _mass_beyond(grid: Grid, rho: np.ndarray, screen: ScreenPlane) -> float:
    """Fraction of the density mass at or beyond the screen plane."""
    coord = grid.axis(screen.axis)
    sel = coord >= screen.position
    total = float(rho.sum())
    if total <= 0.0:
        return 0.0
    beyond = float(np.compress(sel, rho, axis=screen.axis).sum())
    return beyond / total


def _integrate_born(law, history, x0, t0, t1, base_seed, screen):
    m, dims = x0.shape
    if t1 < t0:
        raise ValueError("Born resampling only runs forwards")
    n_events = int(math.floor((t1 - t0) / law.resample_dt + 1e-9))
    book = _Integrator(m, dims, screen)
    pos = x0.copy()
    rec_times = [t0]
    rec = [pos.copy()]
    uu = np.empty((m, n_events, dims + 1))
    for i in range(m):
        uu[i] = member_rng(base_seed, i).random((n_events, dims + 1))
    grid = history.grid
    m_prev = 0.0
    for e in range(n_events):
        t = t0 + (e + 1) * law.resample_dt
        rho = history.density_at_time(t)
        if dims == 1:
            new = sample_from_density_1d(grid.axis(0), rho, uu[:, e, 0])[:, None]
        else:
            new = sample_from_density_2d(grid.axis(0), grid.axis(1), rho, uu[:, e, :dims])
        pos = new
        # Positions at consecutive events are independent draws, so there is
        # no path to interpolate a crossing from.  The screen instead clicks
        # for a member found beyond the plane with a thinning probability
        # chosen so that P(click by t) equals the mass that has crossed the
        # plane by t; the detection-time law then matches the probability
        # flux that governs the continuous-path laws, and the recorded
        # position is still the member's own sampled position.
        if screen is not None:
            m_now = _mass_beyond(grid, rho, screen)
            gain = m_now - m_prev
            if gain > 0.0 and m_now > 0.0:
                accept = gain / ((1.0 - m_prev) * m_now)
                hit = (
                    ~book.crossed
                    & (pos[:, screen.axis] >= screen.position)
                    & (uu[:, e, dims] < accept)
                )
                book.cross_pos[hit] = pos[hit]
                book.cross_t[hit] = t
                book.crossed[hit] = True
            m_prev = max(m_prev, m_now)
        rec_times.append(t)
        rec.append(pos.copy())
    if rec_times[-1] < t1 - 1e-12:
        rec_times.append(t1)
        rec.append(pos.copy())
    ens = _assemble(rec_times, rec, book, law, base_seed, False)
    return ens, book.screen_record(m, dims)


def _integrate_nelson(law, history, x0, t0, t1, dt, base_seed, record_every, screen):
    m, dims = x0.shape
    if t1 < t0:
        raise ValueError("diffusion only runs forwards")
    steps = _check_divides(t1 - t0, dt)
    h = (t1 - t0) / steps
    noise = np.empty((m, steps, dims))
    for i in range(m):
        noise[i] = member_rng(base_seed, i).standard_normal((steps, dims))
    amp = math.sqrt(2.0 * law.nu * h)
    book = _Integrator(m, dims, screen)
    max_step = RUNAWAY_SPACINGS * max(history.grid.spacing)
    pos = x0.copy()
    rec_times = [t0]
    rec = [pos.copy()]
    t = t0
    for s in range(steps):
        drift = history.velocity_batch(pos, t, law)
        newpos = pos + h * drift + amp * noise[:, s, :]
        prev = pos.copy()
        pos = book.apply_strikes(pos, newpos, max_step)
        t = t0 + (s + 1) * h
        book.check_screen(prev, pos, t - h, t)
        if (s + 1) % record_every == 0 or s == steps - 1:
            rec_times.append(t)
            rec.append(pos.copy())
    ens = _assemble(rec_times, rec, book, law, base_seed, False)
    return ens, book.screen_record(m, dims)


def integrate(
    law: DynamicsLaw,
    history: WavefunctionHistory,
    x0,
    t0: float,
    t1: float,
    dt: float,
    seed: int = 0,
) -> Trajectory:
    """Single-trajectory convenience wrapper; raises on integration failure."""
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    ens, _ = integrate_ensemble(law, history, x0[None, :], t0, t1, dt, base_seed=seed)
    traj = ens.trajectory(0)
    if traj.status == STATUS_LEFT_SUPPORT:
        raise LeftSupportError("trajectory entered an undefined-density region")
    if traj.status == STATUS_SINGULARITY:
        raise SingularityHitError("trajectory entered a singularity neighbourhood")
    return traj


# --- pointwise velocity -----------------------------------------------------


def velocity_at(law: DynamicsLaw, wf: WaveFunction, x) -> np.ndarray:
    """Law velocity at a single position, bilinearly interpolated from the grid."""
    if not isinstance(law, (Standard, Modified)):
        raise TypeError(f"velocity_at is defined for deterministic laws, not {law_label(law)!r}")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    grid = wf.grid
    pg = phase_gradient(wf)
    pos = x[None, :]
    hist = _single_snapshot_history(wf, pg)
    if isinstance(law, Modified) and law.j.singular_mask(
        pos, min_radius=SINGULARITY_RADIUS_FACTOR * max(grid.spacing)
    ).any():
        raise SingularityHitError(f"position {x} is inside the excluded singularity set")
    v = hist.velocity_batch(pos, 0.0, law)[0]
    if np.any(np.isnan(v)):
        raise UndefinedAtNodeError(f"density below cutoff at {x}")
    return v


# --- double-slit experiment -------------------------------------------------


@dataclass(frozen=True)
class DoubleSlitConfig:
    """Two-packet interference run with a crossing screen.

    Two Gaussian packets start at (+-slit_separation/2, source_y) moving in
    +y with wavenumber forward_k; the screen plane y = screen_position
    records the first crossing of each trajectory.
    """

    extent: tuple[float, float] = (-32.0, 32.0)
    points: int = 256
    slit_separation: float = 6.0
    source_y: float = -10.0
    width: float = 1.0
    forward_k: float = 5.0
    screen_position: float = 5.0
    t_final: float = 4.4
    dt_snap: float = 0.05
    dt: float = 0.01
    n: int = 10000
    seed: int = 0
    mass: float = 1.0
    hbar: float = 1.0

    def validate(self) -> None:
        lo, hi = self.extent
        if not lo < hi:
            raise ConfigError("extent", "lower bound must be below upper bound")
        if self.points < 64 or self.points & (self.points - 1):
            raise ConfigError("points", "must be a power of two >= 64")
        if not lo < self.screen_position < hi:
            raise ConfigError("screen_position", "screen plane must lie inside the grid")
        if not lo < self.source_y < self.screen_position:
            raise ConfigError("source_y", "source must lie inside the grid, below the screen")
        if self.slit_separation <= 0 or self.slit_separation >= hi - lo:
            raise ConfigError("slit_separation", "slits must be distinct and inside the grid")
        if self.width <= 0:
            raise ConfigError("width", "packet width must be positive")
        if self.forward_k <= 0:
            raise ConfigError("forward_k", "packets must move towards the screen")
        if self.t_final <= 0 or self.dt_snap <= 0 or self.dt <= 0:
            raise ConfigError("t_final", "times and steps must be positive")
        if self.n < 0:
            raise ConfigError("n", "ensemble size must be >= 0")

    def grid(self) -> Grid:
        return Grid.regular(self.extent, self.points, dims=2)

    def initial_state(self) -> WaveFunction:
        from .grid import make_gaussian_packet, superpose

        self.validate()
        grid = self.grid()
        half = 0.5 * self.slit_separation
        k = (0.0, self.forward_k)
        left = make_gaussian_packet(grid, (-half, self.source_y), self.width, k,
                                    mass=self.mass, hbar=self.hbar)
        right = make_gaussian_packet(grid, (half, self.source_y), self.width, k,
                                     mass=self.mass, hbar=self.hbar)
        inv = 1.0 / math.sqrt(2.0)
        return superpose(left, right, (inv, inv))

    def history(self) -> WavefunctionHistory:
        from .grid import FreePotential

        return WavefunctionHistory.evolve(
            self.initial_state(), FreePotential(), self.t_final, self.dt_snap
        )

    def screen(self) -> ScreenPlane:
        return ScreenPlane(axis=1, position=self.screen_position)


def run_double_slit(
    law: DynamicsLaw,
    config: DoubleSlitConfig,
    history: WavefunctionHistory | None = None,
) -> tuple[Ensemble, ScreenRecord]:
    """Integrate a Born-distributed ensemble through the two-slit evolution.

    Returns the ensemble (per-trajectory error codes included) and the
    first-crossing record at the screen plane.  Pass a precomputed history
    to amortize the wavefunction evolution across laws.
    """
    config.validate()
    if history is None:
        history = config.history()
    x0 = sample_initial(history.wavefunction(0.0) if history.psis is not None
                        else config.initial_state(), config.n, config.seed).final_positions()
    if config.n == 0:
        empty = Ensemble(np.zeros(1), np.zeros((0, 1, 2)), np.zeros(0, dtype=np.int8),
                         law_label(law), config.seed)
        none_crossed = ScreenRecord(np.zeros(0, dtype=bool), np.zeros((0, 2)), np.zeros(0))
        return empty, none_crossed
    ens, rec = integrate_ensemble(
        law, history, x0, 0.0, config.t_final, config.dt,
        base_seed=config.seed, record_every=5, screen=config.screen(),
    )
    return ens, rec


def _single_snapshot_history(wf: WaveFunction, pg) -> WavefunctionHistory:
    grid = wf.grid
    vel = np.empty((1, grid.dims) + grid.shape)
    osm = np.empty_like(vel)
    rho = wf.density()[None, ...]
    grad = spectral_gradient(grid, wf.psi)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = grad / wf.psi[..., None]
    for a in range(grid.dims):
        va = (wf.hbar / wf.mass) * pg.values[..., a]
        vel[0, a] = va
        oa = np.real(ratio[..., a])
        oa[~pg.defined] = np.nan
        osm[0, a] = oa
    return WavefunctionHistory(grid, np.zeros(1), vel, osm, rho, wf.mass, wf.hbar)
