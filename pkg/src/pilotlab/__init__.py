"""Numerical laboratory for pilot-wave particle dynamics.

Propagates wavefunctions spectrally, integrates the family of empirically
equivalent guidance laws, simulates weak velocity measurements with
post-selection, and runs the discrete weak-value and which-way-record
experiments, all behind a deterministic CLI.
"""

from .errors import PilotLabError
from .grid import (
    FreePotential,
    Grid,
    HarmonicPotential,
    WaveFunction,
    make_gaussian_packet,
    phase_gradient,
    propagate,
    superpose,
)
from .dynamics import (
    BornResampling,
    DoubleSlitConfig,
    Ensemble,
    Modified,
    NelsonDiffusion,
    ScreenPlane,
    Standard,
    Trajectory,
    WavefunctionHistory,
    integrate,
    integrate_ensemble,
    run_double_slit,
    sample_initial,
    velocity_at,
)
from .fields import (
    ConstantField,
    DivergenceFreeField,
    EllipticSwirlField,
    GaussianSwirlField,
    RotationalField,
)
from .weakmeas import (
    CompoundState,
    PointerModel,
    WeakRun,
    cor_test,
    couple,
    evolve_compound,
    operational_velocity,
    weak_run_analytic,
    weak_run_monte_carlo,
)
from .discrete import FiniteOperator, FiniteState, pointer_shift_check, weak_value
from .surreal import SurrealConfig, build_effective_state, flip_statistics, run_surreal
from .stats import Histogram, bootstrap_se, ks_against_density, ks_two_sample

__version__ = "1.0.0"
