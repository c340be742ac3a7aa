"""Spatial gain/loss reservoirs and the coupling matrices they induce.

A reservoir is a piecewise-constant rate density rho(x) on [0, 1]; the dipole
projection and interaction-time prefactors are lumped into rho.  Each profile
induces a symmetric coupling matrix

    M[m, n] = eps_n eps_m  integral rho(x) u_n(x) u_m(x) dx,

positive semidefinite because it is a Gram matrix of the modes under the
nonnegative weight rho.  Spatially constant rho gives a diagonal M (mode
orthonormality); only non-constant profiles couple modes.

Segment integrals use the exact sine antiderivatives, so the matrices are
exactly linear in the density and exact per segment (no quadrature error).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .mode_basis import ModeBasis

__all__ = [
    "Segment",
    "RateProfile",
    "CouplingMatrices",
    "coupling_matrix",
    "build_coupling_matrices",
    "position_rate",
    "segment_overlap_matrix",
]

_KINDS = ("gain", "loss")


@dataclass(frozen=True)
class Segment:
    """Half-open interval [x_min, x_max) with a constant rate density."""

    x_min: float
    x_max: float
    density: float

    def __post_init__(self):
        if not (0.0 <= self.x_min < self.x_max <= 1.0):
            raise ValueError(f"segment [{self.x_min}, {self.x_max}) not inside [0, 1]")
        if not np.isfinite(self.density) or self.density < 0.0:
            raise ValueError(f"segment density must be finite and >= 0, got {self.density}")


@dataclass(frozen=True)
class RateProfile:
    """Piecewise-constant rate density of one reservoir (gain or loss)."""

    kind: str
    segments: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"profile kind must be one of {_KINDS}, got {self.kind!r}")
        segs = tuple(
            s if isinstance(s, Segment) else Segment(*s) for s in self.segments
        )
        ordered = sorted(segs, key=lambda s: s.x_min)
        for a, b in zip(ordered, ordered[1:]):
            if b.x_min < a.x_max:
                raise ValueError(
                    f"overlapping segments [{a.x_min}, {a.x_max}) and "
                    f"[{b.x_min}, {b.x_max}) in {self.kind} profile"
                )
        object.__setattr__(self, "segments", tuple(ordered))

    def density_at(self, x: float) -> float:
        """Piecewise evaluation; segments are closed on the left, 0 outside."""
        for s in self.segments:
            if s.x_min <= x < s.x_max:
                return s.density
        return 0.0


@dataclass(frozen=True)
class CouplingMatrices:
    """The symmetric gain and loss matrices induced on one mode basis."""

    gain: np.ndarray
    loss: np.ndarray
    basis: ModeBasis

    def __post_init__(self):
        n = self.basis.n_modes
        for name, m in (("gain", self.gain), ("loss", self.loss)):
            if m.shape != (n, n):
                raise ValueError(f"{name} matrix shape {m.shape} != ({n}, {n})")
            if not np.array_equal(m, m.T):
                raise ValueError(f"{name} matrix must be exactly symmetric")


def segment_overlap_matrix(basis: ModeBasis, x_min: float, x_max: float) -> np.ndarray:
    """Exact integral of u_n u_m over [x_min, x_max] for every mode pair."""
    if not (0.0 <= x_min < x_max <= 1.0):
        raise ValueError(f"segment [{x_min}, {x_max}] not inside [0, 1]")
    q = basis.mode_numbers.astype(float)
    diff = np.subtract.outer(q, q)
    total = np.add.outer(q, q)

    def antideriv(x: float) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            off = np.sin(diff * np.pi * x) / (diff * np.pi)
        np.fill_diagonal(off, x)
        return off - np.sin(total * np.pi * x) / (total * np.pi)

    out = antideriv(x_max) - antideriv(x_min)
    return 0.5 * (out + out.T)


def coupling_matrix(basis: ModeBasis, profile: RateProfile) -> np.ndarray:
    """Assemble the symmetric coupling matrix of one profile (exact per segment)."""
    n = basis.n_modes
    overlap = np.zeros((n, n))
    for s in profile.segments:
        overlap += s.density * segment_overlap_matrix(basis, s.x_min, s.x_max)
    eps = basis.vacuum_amplitudes
    m = np.outer(eps, eps) * overlap
    return 0.5 * (m + m.T)


def build_coupling_matrices(
    basis: ModeBasis, gain_profile: RateProfile, loss_profile: RateProfile
) -> CouplingMatrices:
    return CouplingMatrices(
        gain=coupling_matrix(basis, gain_profile),
        loss=coupling_matrix(basis, loss_profile),
        basis=basis,
    )


def position_rate(profile: RateProfile, x: float, omega_bar: float) -> float:
    """Position-space rate R(x) = (omega_bar / 2) * rho(x).

    omega_bar is the band-center frequency of the basis in use; the position
    representation replaces every mode frequency by that mean.
    """
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"position {x} outside [0, 1]")
    return 0.5 * omega_bar * profile.density_at(x)
