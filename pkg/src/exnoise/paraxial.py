"""Paraxial propagation of a slowly varying transverse field.

The envelope of a carrier at frequency omega_bar obeys (c = 1)

    dE/dz = [ (1/2)(R_L(x) - R_Gamma(x)) + i/(2 omega_bar) Lap_T ] E,

advanced by a symmetric split step: half a gain/loss multiply, a full
spectral diffraction step, half a gain/loss multiply.  Dirichlet walls use
the sine transform (aperture-like, absorbing edges); periodic uses the FFT.
Profiles are functions of the transverse x coordinate, uniform in y, and
their densities are read directly as position-space rates.

The same operator, discretized as a complex symmetric matrix, feeds the
quasi-mode solver to give transverse excess-noise factors; in the Hermitian
limit R_L = R_Gamma the operator is normal and every K is 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional
import math
import warnings

import numpy as np
from scipy.fft import dstn, idstn, fft2, ifft2

from .quasimodes import QuasiModeSet, petermann_k_coeff, solve_mode_operator
from .reservoir_coupling import RateProfile

__all__ = [
    "TransverseField",
    "transverse_coordinates",
    "gaussian_beam",
    "paraxial_step",
    "propagate_paraxial",
    "beam_width",
    "transverse_quasimodes",
]

_BOUNDARIES = ("dirichlet", "periodic")


def transverse_coordinates(n: int, boundary: str = "dirichlet") -> np.ndarray:
    """Transverse sample positions on [0, 1] for the chosen wall condition."""
    if boundary == "dirichlet":
        return np.arange(1, n + 1) / (n + 1)
    if boundary == "periodic":
        return np.arange(n) / n
    raise ValueError(f"boundary must be one of {_BOUNDARIES}, got {boundary!r}")


@dataclass(frozen=True)
class TransverseField:
    """Complex transverse envelope on a square grid at longitudinal position z."""

    samples: np.ndarray
    z: float
    omega_bar: float
    boundary: str = "dirichlet"

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex)
        object.__setattr__(self, "samples", s)
        if s.ndim != 2 or s.shape[0] != s.shape[1]:
            raise ValueError("transverse field must be a square 2D array")
        side = s.shape[0]
        if side & (side - 1):
            raise ValueError(f"grid side must be a power of two, got {side}")
        if self.boundary not in _BOUNDARIES:
            raise ValueError(f"boundary must be one of {_BOUNDARIES}")
        if self.omega_bar <= 0.0:
            raise ValueError("omega_bar must be positive")

    @property
    def coordinates(self) -> np.ndarray:
        return transverse_coordinates(self.samples.shape[0], self.boundary)

    @property
    def spacing(self) -> float:
        x = self.coordinates
        return float(x[1] - x[0])


def gaussian_beam(
    n: int,
    waist: float,
    omega_bar: float,
    center: float = 0.5,
    boundary: str = "dirichlet",
) -> TransverseField:
    """Unit-amplitude Gaussian envelope exp(-r^2 / waist^2) at z = 0."""
    x = transverse_coordinates(n, boundary)
    xx, yy = np.meshgrid(x, x, indexing="ij")
    r2 = (xx - center) ** 2 + (yy - center) ** 2
    return TransverseField(
        samples=np.exp(-r2 / waist**2).astype(complex),
        z=0.0,
        omega_bar=omega_bar,
        boundary=boundary,
    )


def _rate_samples(profile: Optional[RateProfile], x: np.ndarray) -> np.ndarray:
    if profile is None:
        return np.zeros_like(x)
    return np.array([profile.density_at(xi) for xi in x])


def _diffraction_phase(n: int, boundary: str, omega_bar: float, dz: float) -> np.ndarray:
    if boundary == "dirichlet":
        k = np.arange(1, n + 1) * np.pi
    else:
        k = 2.0 * np.pi * np.fft.fftfreq(n, d=1.0 / n)
    k2 = k[:, None] ** 2 + k[None, :] ** 2
    return np.exp(-1j * k2 * dz / (2.0 * omega_bar))


def paraxial_step(
    field: TransverseField,
    gain_profile: Optional[RateProfile],
    loss_profile: Optional[RateProfile],
    dz: float,
    rng: Optional[np.random.Generator] = None,
) -> TransverseField:
    """One symmetric split step of length dz.

    With rng given, a complex Gaussian reservoir kick of cell covariance
    (R_L + R_Gamma)/(2 dA) dz is added after the step (the same symmetric
    noise recipe as the mode-space ensembles, discretized on the grid).
    """
    n = field.samples.shape[0]
    x = field.coordinates
    h = field.spacing
    bound = h * h * field.omega_bar / (2.0 * np.pi)
    if dz > bound:
        warnings.warn(
            f"dz={dz:.3e} exceeds the split-step resolution scale {bound:.3e}",
            RuntimeWarning,
            stacklevel=2,
        )
    net = 0.5 * (_rate_samples(gain_profile, x) - _rate_samples(loss_profile, x))
    if not np.all(np.isfinite(net)):
        raise ValueError("profile rates must be finite")
    half = np.exp(net * (0.5 * dz))[:, None]

    out = half * field.samples
    phase = _diffraction_phase(n, field.boundary, field.omega_bar, dz)
    if field.boundary == "dirichlet":
        spec = dstn(out, type=1, norm="ortho")
        out = idstn(spec * phase, type=1, norm="ortho")
    else:
        out = ifft2(fft2(out) * phase)
    out = half * out

    if rng is not None:
        total = _rate_samples(gain_profile, x) + _rate_samples(loss_profile, x)
        scale = np.sqrt(total / (2.0 * h * h))[:, None] * math.sqrt(dz / 2.0)
        out = out + scale * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))

    return TransverseField(
        samples=out, z=field.z + dz, omega_bar=field.omega_bar, boundary=field.boundary
    )


def propagate_paraxial(
    field: TransverseField,
    gain_profile: Optional[RateProfile],
    loss_profile: Optional[RateProfile],
    dz: float,
    z_final: float,
    rng: Optional[np.random.Generator] = None,
) -> TransverseField:
    """Advance the field to z_final in uniform split steps."""
    n_steps = max(1, int(round(z_final / dz)))
    step = z_final / n_steps
    for _ in range(n_steps):
        field = paraxial_step(field, gain_profile, loss_profile, step, rng=rng)
    return field


def beam_width(field: TransverseField):
    """Intensity-weighted 1/e^2-convention widths (w_x, w_y).

    For a Gaussian envelope exp(-r^2/w^2) this returns w in both axes.
    """
    intensity = np.abs(field.samples) ** 2
    total = intensity.sum()
    if total <= 0.0:
        raise ValueError("zero field has no width")
    x = field.coordinates
    widths = []
    for axis in (1, 0):
        marginal = intensity.sum(axis=axis)
        mean = (x * marginal).sum() / total
        second = (((x - mean) ** 2) * marginal).sum() / total
        widths.append(2.0 * math.sqrt(second))
    return tuple(widths)


def _laplacian_1d(n: int, boundary: str) -> np.ndarray:
    h = 1.0 / (n + 1) if boundary == "dirichlet" else 1.0 / n
    lap = -2.0 * np.eye(n) + np.eye(n, k=1) + np.eye(n, k=-1)
    if boundary == "periodic":
        lap[0, -1] = lap[-1, 0] = 1.0
    return lap / (h * h)


def transverse_quasimodes(
    gain_profile: Optional[RateProfile],
    loss_profile: Optional[RateProfile],
    grid_shape,
    omega_bar: float,
    boundary: str = "dirichlet",
):
    """Quasi modes of the discretized paraxial operator plus their K-factors.

    grid_shape is (nx,) for a 1D slice or (nx, ny) for the full transverse
    plane.  The operator diag((R_L - R_Gamma)/2) + i/(2 omega_bar) Lap is
    complex symmetric in the grid basis (unit weights), so the mode solver
    applies unchanged; K uses the grid inner product.
    """
    if omega_bar <= 0.0:
        raise ValueError("omega_bar must be positive")
    shape = tuple(int(s) for s in np.atleast_1d(grid_shape))
    if len(shape) not in (1, 2):
        raise ValueError("grid_shape must have one or two dimensions")
    nx = shape[0]
    x = transverse_coordinates(nx, boundary)
    gain_1d = _rate_samples(gain_profile, x)
    loss_1d = _rate_samples(loss_profile, x)
    lap_x = _laplacian_1d(nx, boundary)

    if len(shape) == 1:
        gain_diag = gain_1d
        loss_diag = loss_1d
        lap = lap_x
    else:
        ny = shape[1]
        if ny != nx:
            raise ValueError("transverse grid must be square")
        eye = np.eye(nx)
        lap = np.kron(lap_x, eye) + np.kron(eye, _laplacian_1d(nx, boundary))
        gain_diag = np.repeat(gain_1d, nx)
        loss_diag = np.repeat(loss_1d, nx)

    operator = np.diag(0.5 * (gain_diag - loss_diag)) + 1j * lap / (2.0 * omega_bar)
    qset = solve_mode_operator(
        operator, gain=np.diag(gain_diag), loss=np.diag(loss_diag)
    )
    k_factors = np.array([petermann_k_coeff(qset, nu) for nu in range(qset.n_modes)])
    return qset, k_factors
