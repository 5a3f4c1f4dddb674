"""Finite-dimensional pre/post-selected weak values.

Includes the three-box construction whose projector weak values are 1, 1
and -1: conditional "occupations" that are individually certain yet sum the
only way arithmetic allows, by one of them being negative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import OrthogonalSelectionError, WidthTooSmallError

#: Pre/post selections with |<post|pre>| at or below this are rejected.
ORTHOGONALITY_CUTOFF = 1e-10

#: Weak-regime gate for the finite-width pointer simulation: sigma must be
#: at least this many spectral radii of the coupled operator.
MIN_SIGMA_RADII = 5.0


@dataclass(frozen=True)
class FiniteState:
    """Unit vector in a d-dimensional Hilbert space."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amp = np.ascontiguousarray(self.amplitudes, dtype=np.complex128)
        if amp.ndim != 1 or amp.size == 0:
            raise ValueError("amplitudes must be a nonempty vector")
        if abs(np.linalg.norm(amp) - 1.0) > 1e-12:
            raise ValueError(f"state not normalized: |v| = {np.linalg.norm(amp)!r}")
        amp.flags.writeable = False
        object.__setattr__(self, "amplitudes", amp)

    @classmethod
    def normalized(cls, amplitudes) -> "FiniteState":
        amp = np.asarray(amplitudes, dtype=np.complex128)
        nrm = np.linalg.norm(amp)
        if nrm == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return cls(amp / nrm)

    @property
    def dimension(self) -> int:
        return self.amplitudes.size


@dataclass(frozen=True)
class FiniteOperator:
    """d x d complex matrix, optionally declared (and verified) hermitian."""

    matrix: np.ndarray
    hermitian: bool = False
    label: str = ""

    def __post_init__(self):
        mat = np.ascontiguousarray(self.matrix, dtype=np.complex128)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError("matrix must be square")
        if self.hermitian and np.max(np.abs(mat - mat.conj().T)) >= 1e-12:
            raise ValueError("matrix declared hermitian is not")
        mat.flags.writeable = False
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def projector(cls, state: FiniteState, label: str = "") -> "FiniteOperator":
        v = state.amplitudes
        return cls(np.outer(v, v.conj()), hermitian=True, label=label)

    @classmethod
    def identity(cls, d: int, label: str = "1") -> "FiniteOperator":
        return cls(np.eye(d, dtype=np.complex128), hermitian=True, label=label)

    def spectral_radius(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvals(self.matrix))))


def _overlap(pre: FiniteState, post: FiniteState) -> complex:
    ov = complex(np.vdot(post.amplitudes, pre.amplitudes))
    if abs(ov) <= ORTHOGONALITY_CUTOFF:
        raise OrthogonalSelectionError(
            f"|<post|pre>| = {abs(ov):.3e} <= {ORTHOGONALITY_CUTOFF}"
        )
    return ov


def weak_value(A: FiniteOperator, pre: FiniteState, post: FiniteState) -> complex:
    """<post|A|pre> / <post|pre>: complex, linear in A, unbounded."""
    ov = _overlap(pre, post)
    num = complex(np.vdot(post.amplitudes, A.matrix @ pre.amplitudes))
    return num / ov


def pointer_shift_check(
    A: FiniteOperator, pre: FiniteState, post: FiniteState, sigma: float
) -> float:
    """Mean post-selected pointer shift for a finite-width Gaussian pointer.

    The pointer starts in exp(-y^2 / 4 sigma^2) and is displaced by the
    eigenvalue of A on each branch; post-selection leaves the pointer in a
    superposition of displaced Gaussians whose mean position is evaluated in
    closed form.  Converges to Re of the weak value with an O(1/sigma^2)
    residual as sigma grows.
    """
    if not A.hermitian:
        raise ValueError("pointer coupling requires a hermitian operator")
    radius = A.spectral_radius()
    if radius > 0.0 and sigma < MIN_SIGMA_RADII * radius:
        raise WidthTooSmallError(
            f"sigma {sigma} below weak-regime bound {MIN_SIGMA_RADII} * {radius}"
        )
    _overlap(pre, post)
    evals, evecs = np.linalg.eigh(A.matrix)
    # branch amplitudes after post-selection: z_a = <post|a><a|pre>
    z = (evecs.conj().T @ pre.amplitudes) * (evecs.conj().T @ post.amplitudes).conj()
    # overlaps of Gaussians displaced by eigenvalues a, b:
    #   <phi(y-a)|y|phi(y-b)> / <phi|phi> = exp(-(a-b)^2/8 sigma^2) * (a+b)/2
    diff = evals[:, None] - evals[None, :]
    kernel = np.exp(-(diff**2) / (8.0 * sigma**2))
    weights = np.real(z[:, None] * z[None, :].conj() * kernel)
    denom = float(weights.sum())
    if denom <= 0.0:
        raise OrthogonalSelectionError("post-selected pointer state has vanishing norm")
    mean = evals[:, None] + evals[None, :]
    return float((weights * 0.5 * mean).sum() / denom)


# --- the three-box construction --------------------------------------------


def three_box_states() -> tuple[FiniteState, FiniteState]:
    """Pre-selection (|A>+|B>+|C>)/sqrt(3) and post-selection (|A>+|B>-|C>)/sqrt(3)."""
    inv = 1.0 / math.sqrt(3.0)
    pre = FiniteState(np.array([inv, inv, inv], dtype=complex))
    post = FiniteState(np.array([inv, inv, -inv], dtype=complex))
    return pre, post


def box_projectors() -> tuple[FiniteOperator, FiniteOperator, FiniteOperator]:
    basis = np.eye(3, dtype=complex)
    return tuple(
        FiniteOperator.projector(FiniteState(basis[i]), label=f"P_{name}")
        for i, name in enumerate("ABC")
    )
