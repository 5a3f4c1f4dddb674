"""Exception hierarchy shared by all pilotlab modules."""


class PilotLabError(Exception):
    """Base class for all pilotlab errors."""


class GridMismatchError(PilotLabError):
    """Two wavefunctions live on different grids."""


class WidthTooSmallError(PilotLabError):
    """Requested packet width is too narrow for the grid spacing (aliasing risk)."""


class PacketTouchesBoundaryError(PilotLabError):
    """Packet amplitude exceeds the boundary guard at the grid edge."""


class DestructiveAnnihilationError(PilotLabError):
    """Superposition norm vanished before renormalization."""


class StabilityBoundError(PilotLabError):
    """Time step violates the documented spectral accuracy bound."""


class SingularityHitError(PilotLabError):
    """Trajectory entered the excluded neighbourhood of a field singularity."""


class UndefinedAtNodeError(PilotLabError):
    """Velocity requested at a point where the density is below the cutoff."""


class LeftSupportError(PilotLabError):
    """Trajectory entered a region where the velocity field is undefined."""


class SampleTooSmallError(PilotLabError):
    """Statistical routine called with too few samples."""


class OrthogonalSelectionError(PilotLabError):
    """Pre- and post-selected states are (numerically) orthogonal."""


class GridOverflowError(PilotLabError):
    """Compound state support does not fit the pointer grid."""


class UnmatchedEnsembleError(PilotLabError):
    """Weak run lacks the matched trajectory ensemble required for the comparison."""


class NonlinearityError(PilotLabError):
    """Delay-ladder fit residual exceeds the linearity threshold."""


class PacketsNotDisjointError(PilotLabError):
    """Interferometer arms overlap at preparation time."""


class ConfigError(PilotLabError):
    """Experiment configuration failed validation."""

    def __init__(self, key: str, reason: str):
        self.key = key
        self.reason = reason
        super().__init__(f"config key {key!r}: {reason}")


class IncompatibleRunsError(PilotLabError):
    """Comparison requested between incompatible experiment runs."""
