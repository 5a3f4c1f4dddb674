"""Divergence-free velocity-density fields for the modified guidance laws.

A field j enters the particle dynamics as an additive term j/|psi|^2 on top
of the standard guidance velocity; any divergence-free j leaves the ensemble
statistics unaltered.  Fields are defined by closed-form rules so they can
be evaluated exactly at particle positions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import Grid

#: Max-norm gate on the discrete divergence, checked off the singularity set.
DIVERGENCE_TOL = 1e-6

#: Step used for the centered-difference divergence check.
DIVERGENCE_CHECK_STEP = 1e-4


@dataclass(frozen=True)
class Singularity:
    """Excluded neighbourhood around a point where the field is undefined."""

    center: tuple[float, ...]
    radius: float = 0.0


@dataclass(frozen=True)
class DivergenceFreeField:
    """Base: a closed-form rule mapping positions to velocity-density vectors."""

    singularities: tuple[Singularity, ...] = field(default=(), kw_only=True)

    def values(self, points: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def singular_mask(self, points: np.ndarray, min_radius: float = 0.0) -> np.ndarray:
        """True where a point falls inside an excluded neighbourhood."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        mask = np.zeros(points.shape[0], dtype=bool)
        for s in self.singularities:
            r = max(s.radius, min_radius)
            d2 = np.sum((points - np.asarray(s.center)) ** 2, axis=1)
            mask |= d2 < r * r
        return mask

    def check_divergence(self, grid: Grid, tol: float = DIVERGENCE_TOL) -> float:
        """Centered-difference divergence over the grid, off the singularity set.

        Raises ValueError if the max norm exceeds ``tol``; returns the max norm.
        """
        pts = np.stack([c.ravel() for c in grid.meshgrid()], axis=1)
        margin = 2.0 * max(grid.spacing)
        keep = ~self.singular_mask(pts, min_radius=margin)
        pts = pts[keep]
        h = DIVERGENCE_CHECK_STEP
        div = np.zeros(pts.shape[0])
        for a in range(grid.dims):
            plus = pts.copy()
            minus = pts.copy()
            plus[:, a] += h
            minus[:, a] -= h
            div += (self.values(plus)[:, a] - self.values(minus)[:, a]) / (2.0 * h)
        worst = float(np.max(np.abs(div))) if div.size else 0.0
        if worst > tol:
            raise ValueError(f"discrete divergence {worst:.3e} exceeds {tol:.0e}")
        return worst


@dataclass(frozen=True)
class ConstantField(DivergenceFreeField):
    """Spatially constant field; the only divergence-free option in 1D."""

    components: tuple[float, ...] = (0.0,)

    def values(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return np.broadcast_to(np.asarray(self.components, dtype=float), points.shape).copy()


def _offsets(points: np.ndarray, center: tuple[float, float]):
    points = np.atleast_2d(np.asarray(points, dtype=float))
    dx = points[:, 0] - center[0]
    dy = points[:, 1] - center[1]
    return dx, dy


@dataclass(frozen=True)
class RotationalField(DivergenceFreeField):
    """The singular vortex j = a * (-dy, dx) / (dx^2 + dy^2) about ``center``.

    Undefined at the center; the declared singularity is widened to twice the
    working grid spacing by the trajectory integrator.
    """

    amplitude: float = 1.0
    center: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not self.singularities:
            object.__setattr__(self, "singularities", (Singularity(self.center),))

    def values(self, points: np.ndarray) -> np.ndarray:
        dx, dy = _offsets(points, self.center)
        r2 = dx * dx + dy * dy
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.stack([-dy / r2, dx / r2], axis=1) * self.amplitude
        out[r2 == 0.0] = np.nan
        return out


@dataclass(frozen=True)
class GaussianSwirlField(DivergenceFreeField):
    """Smooth rotational field from the stream function a*exp(-r^2/2w^2).

    j = (a/w^2) exp(-r^2/2w^2) * (-dy, dx): rigid rotation near the center,
    Gaussian decay outside, divergence-free everywhere with no singularity.
    """

    amplitude: float = 1.0
    width: float = 1.0
    center: tuple[float, float] = (0.0, 0.0)

    def values(self, points: np.ndarray) -> np.ndarray:
        dx, dy = _offsets(points, self.center)
        r2 = dx * dx + dy * dy
        w2 = self.width * self.width
        g = (self.amplitude / w2) * np.exp(-r2 / (2.0 * w2))
        return np.stack([-dy * g, dx * g], axis=1)


@dataclass(frozen=True)
class EllipticSwirlField(DivergenceFreeField):
    """Anisotropic rotation from the stream function a*exp(-x^2/2wx^2 - y^2/2wy^2).

    j = chi * (-dy/wy^2, dx/wx^2) circulates on ellipses; a wide wx with a
    narrow wy confines the field to a band around the center, so it can cover
    a full interference region while staying negligible at a distant plane.
    """

    amplitude: float = 1.0
    widths: tuple[float, float] = (1.0, 1.0)
    center: tuple[float, float] = (0.0, 0.0)

    def values(self, points: np.ndarray) -> np.ndarray:
        dx, dy = _offsets(points, self.center)
        wx2 = self.widths[0] ** 2
        wy2 = self.widths[1] ** 2
        chi = self.amplitude * np.exp(-dx * dx / (2.0 * wx2) - dy * dy / (2.0 * wy2))
        return np.stack([-dy / wy2 * chi, dx / wx2 * chi], axis=1)
