"""Counter-propagating packets with which-way spin records.

Two disjoint packets converge, interfere and separate again.  Spin-site
records flip along each packet's path, but their spatial factors are
identical across branches, so in spin-only mode they drop out of the
guidance entirely: the particle reflects off the symmetry axis while the
post-selected spin track names the opposite arm.  Configurational records
decohere the branches instead, and the trajectories cross.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import (
    STATUS_OK,
    Ensemble,
    Standard,
    WavefunctionHistory,
    integrate_ensemble,
    sample_initial,
)
from .errors import PacketsNotDisjointError
from .grid import FreePotential, Grid, WaveFunction, make_gaussian_packet, superpose

#: Packets count as disjoint while their amplitude overlap integral stays below this.
DISJOINT_OVERLAP = 1e-10

#: The traversed-arm checkpoint is the last snapshot before the branch
#: overlap integral first exceeds this.
CHECKPOINT_OVERLAP = 1e-6


@dataclass(frozen=True)
class SurrealConfig:
    """Mirrored packet pair, spin sites, and the record mode."""

    extent: tuple[float, float] = (-24.0, 24.0)
    points: int = 512
    packet_offset: float = 8.0
    width: float = 1.0
    speed: float = 4.0
    t_final: float = 4.0
    dt_snap: float = 0.05
    dt: float = 0.01
    spin_sites: int = 4
    mode: str = "spin-only"
    weights: tuple[float, float] = (math.sqrt(0.5), math.sqrt(0.5))
    n: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("spin-only", "configurational"):
            raise ValueError(f"unknown record mode {self.mode!r}")
        if self.packet_offset <= 0 or self.speed <= 0:
            raise ValueError("packets must start apart and move towards each other")
        if self.spin_sites < 0:
            raise ValueError("spin site count must be >= 0")

    def grid(self) -> Grid:
        return Grid.regular(self.extent, self.points)

    def site_positions(self) -> tuple[tuple[float, ...], tuple[float, ...]]:
        """Symmetric L-track and R-track site coordinates (labels only: the
        sites are non-configurational and never enter the dynamics)."""
        step = self.packet_offset / (self.spin_sites + 1)
        left = tuple(-(i + 1) * step for i in range(self.spin_sites))
        right = tuple(+(i + 1) * step for i in range(self.spin_sites))
        return left, right

    def branches(self) -> tuple[WaveFunction, WaveFunction]:
        """Left-origin branch moving right, and its mirror image."""
        grid = self.grid()
        b1 = make_gaussian_packet(grid, -self.packet_offset, self.width, self.speed)
        b2 = make_gaussian_packet(grid, self.packet_offset, self.width, -self.speed)
        overlap = float(np.sum(np.abs(b1.psi) * np.abs(b2.psi)) * grid.cell_volume)
        if overlap >= DISJOINT_OVERLAP:
            raise PacketsNotDisjointError(
                f"initial packet overlap {overlap:.3e} >= {DISJOINT_OVERLAP}"
            )
        return b1, b2


@dataclass(frozen=True)
class SpinRecord:
    """Binary flip flags per site for both tracks at read-out time."""

    left_flips: tuple[bool, ...]
    right_flips: tuple[bool, ...]
    readout_time: float

    @classmethod
    def for_arm(cls, arm: str, sites: int, readout_time: float) -> "SpinRecord":
        left = arm == "L"
        return cls(
            left_flips=(left,) * sites,
            right_flips=(not left,) * sites,
            readout_time=readout_time,
        )


@dataclass(frozen=True)
class SurrealOutcome:
    trajectory_index: int
    traversed: str  # arm actually taken before the interference region
    recorded: str  # arm named by the post-selected spin track
    final_side: str
    reflected: bool
    record: SpinRecord


def build_effective_state(config: SurrealConfig):
    """Evolved guidance state(s) for the configured record mode.

    Spin-only: one history for the coherent superposition; the spin factors
    are common to both branches and drop out, so the spin-site count never
    enters.  Configurational: one history per decohered branch.
    """
    b1, b2 = config.branches()
    if config.mode == "spin-only":
        state = superpose(b1, b2, config.weights)
        return WavefunctionHistory.evolve(
            state, FreePotential(), config.t_final, config.dt_snap
        )
    return (
        WavefunctionHistory.evolve(b1, FreePotential(), config.t_final, config.dt_snap),
        WavefunctionHistory.evolve(b2, FreePotential(), config.t_final, config.dt_snap),
    )


def _branch_overlap_times(config: SurrealConfig) -> float:
    """Last snapshot time before the branch packets start to overlap."""
    b1, b2 = config.branches()
    h1 = WavefunctionHistory.evolve(b1, FreePotential(), config.t_final, config.dt_snap)
    h2 = WavefunctionHistory.evolve(b2, FreePotential(), config.t_final, config.dt_snap)
    vol = config.grid().cell_volume
    checkpoint = h1.times[0]
    for s, t in enumerate(h1.times):
        overlap = float(np.sum(np.sqrt(h1.rho[s] * h2.rho[s])) * vol)
        if overlap > CHECKPOINT_OVERLAP:
            break
        checkpoint = t
    return float(checkpoint)


def run_surreal(config: SurrealConfig) -> tuple[list[SurrealOutcome], Ensemble]:
    """Integrate the ensemble and assemble per-trajectory records.

    The branch structure ties each final side to one spin track: the
    right-moving branch flips the L-track and ends on the right.  In
    spin-only mode the recorded arm therefore follows the final side; in
    configurational mode each member is guided by its own branch alone.
    """
    checkpoint = _branch_overlap_times(config)
    weights = np.asarray(config.weights, dtype=float) ** 2
    weights = weights / weights.sum()

    if config.mode == "spin-only":
        history = build_effective_state(config)
        x0 = sample_initial(_mixture_state(config), config.n, config.seed).final_positions()
        ens, _ = integrate_ensemble(
            Standard(), history, x0, 0.0, config.t_final, config.dt,
            base_seed=config.seed,
        )
    else:
        h1, h2 = build_effective_state(config)
        x0_full = sample_initial(
            _mixture_state(config), config.n, config.seed
        ).final_positions()
        left_mask = x0_full[:, 0] < 0.0
        positions = None
        times = None
        status = np.zeros(config.n, dtype=np.int8)
        for hist, mask in ((h1, left_mask), (h2, ~left_mask)):
            if not np.any(mask):
                continue
            sub, _ = integrate_ensemble(
                Standard(), hist, x0_full[mask], 0.0, config.t_final, config.dt,
                base_seed=config.seed,
            )
            if positions is None:
                times = sub.times
                positions = np.empty((config.n, times.size, 1))
            positions[mask] = sub.positions
            status[mask] = sub.status
        ens = Ensemble(times, positions, status, "standard", config.seed)

    ci = int(np.argmin(np.abs(ens.times - checkpoint)))
    outcomes = []
    for i in range(ens.size):
        if ens.status[i] != STATUS_OK:
            continue
        traversed = "L" if ens.positions[i, ci, 0] < 0.0 else "R"
        final_side = "L" if ens.positions[i, -1, 0] < 0.0 else "R"
        if config.mode == "spin-only":
            # the branch occupying the final side carries the opposite track
            recorded = "L" if final_side == "R" else "R"
        else:
            # decohered: the member's own branch made its record
            recorded = traversed
        outcomes.append(
            SurrealOutcome(
                trajectory_index=i,
                traversed=traversed,
                recorded=recorded,
                final_side=final_side,
                reflected=traversed == final_side,
                record=SpinRecord.for_arm(recorded, config.spin_sites, config.t_final),
            )
        )
    return outcomes, ens


def _mixture_state(config: SurrealConfig) -> WaveFunction:
    b1, b2 = config.branches()
    return superpose(b1, b2, config.weights)


@dataclass(frozen=True)
class FlipSummary:
    n: int
    left_fraction: float
    interval: tuple[float, float]
    degenerate: bool


def flip_statistics(outcomes: list[SurrealOutcome]) -> FlipSummary:
    """Fraction of L-track records with a 3-sigma binomial interval."""
    if not outcomes:
        raise ValueError("empty outcome list")
    n = len(outcomes)
    frac = sum(1 for o in outcomes if o.recorded == "L") / n
    half = 3.0 * math.sqrt(max(frac * (1.0 - frac), 0.0) / n)
    return FlipSummary(
        n=n,
        left_fraction=frac,
        interval=(frac - half, frac + half),
        degenerate=n < 2 or half == 0.0,
    )
