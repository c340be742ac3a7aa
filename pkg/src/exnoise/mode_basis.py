"""Orthonormal universe modes of the unit interval.

The mode universe is the 1D box [0, 1] in natural units (hbar = eps0 = c = 1,
unit volume).  Universe mode q is

    u_q(x) = sqrt(2) sin(q pi x),    omega_q = q pi,    eps_q = sqrt(omega_q / 2),

where eps_q is the per-mode vacuum field amplitude.  A basis holds n_modes
consecutive modes starting at universe index q0; a large q0 places the band
near a carrier frequency q0*pi so that the relative band width stays small,
as in the optical regime.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.fft import dst, idst

__all__ = [
    "SpatialGrid",
    "ModeBasis",
    "build_sine_basis",
    "inner_product",
    "helmholtz_residual",
]


@dataclass(frozen=True)
class SpatialGrid:
    """Quadrature grid on [0, 1]: increasing points with positive weights summing to 1."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        wts = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", wts)
        if pts.ndim != 1 or wts.shape != pts.shape:
            raise ValueError("grid points and weights must be matching 1D arrays")
        if pts.size < 2:
            raise ValueError("grid needs at least two points")
        if pts[0] < 0.0 or pts[-1] > 1.0:
            raise ValueError("grid points must lie in [0, 1]")
        if np.any(np.diff(pts) <= 0.0):
            raise ValueError("grid points must be strictly increasing")
        if np.any(wts <= 0.0):
            raise ValueError("grid weights must be strictly positive")
        if abs(wts.sum() - 1.0) > 1e-12:
            raise ValueError("grid weights must sum to 1 within 1e-12")

    @classmethod
    def uniform(cls, n_points: int) -> "SpatialGrid":
        """Composite-trapezoid grid with endpoints on the box walls."""
        if n_points < 2:
            raise ValueError("uniform grid needs at least two points")
        points = np.linspace(0.0, 1.0, n_points)
        weights = np.full(n_points, 1.0 / (n_points - 1))
        weights[0] *= 0.5
        weights[-1] *= 0.5
        return cls(points, weights)

    @property
    def n_points(self) -> int:
        return self.points.size

    def integrate(self, values: np.ndarray) -> complex:
        """Quadrature of grid samples against the (1/V) integral measure, V = 1."""
        values = np.asarray(values)
        if values.shape[-1] != self.points.size:
            raise ValueError("sample length does not match the grid")
        return values @ self.weights


@dataclass(frozen=True)
class ModeBasis:
    """Sine modes q0 .. q0+n_modes-1 sampled on a grid.

    frequencies[n] = (q0+n)*pi, vacuum_amplitudes[n] = sqrt(frequencies[n]/2),
    samples[n] = u_{q0+n} evaluated on grid.points.
    """

    grid: SpatialGrid
    n_modes: int
    mode_index_offset: int
    frequencies: np.ndarray
    vacuum_amplitudes: np.ndarray
    samples: np.ndarray

    @property
    def mode_numbers(self) -> np.ndarray:
        """Universe indices q of the stored modes."""
        return self.mode_index_offset + np.arange(self.n_modes)

    @property
    def omega_bar(self) -> float:
        """Band-center frequency, weighted by the vacuum amplitudes squared."""
        w = self.vacuum_amplitudes**2
        return float(np.sum(w * self.frequencies) / np.sum(w))

    @property
    def delta_omega(self) -> float:
        """Spectral width of the band."""
        return float(self.frequencies[-1] - self.frequencies[0])

    def evaluate(self, x) -> np.ndarray:
        """Evaluate every mode at arbitrary positions; returns (n_modes, len(x))."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        q = self.mode_numbers
        return np.sqrt(2.0) * np.sin(np.pi * np.outer(q, x))


def _sine_samples(q: int, n_points: int) -> np.ndarray:
    # Exact integer reduction of q*j/(n_points-1) mod 2 keeps the sine argument
    # small; naive evaluation at arguments ~ q*pi loses ~q*eps per sample, which
    # the spectral second derivative then amplifies by k_max^2.
    m = n_points - 1
    r = (q * np.arange(n_points)) % (2 * m)
    return np.sqrt(2.0) * np.sin(np.pi * r / m)


def build_sine_basis(n_modes: int, grid_points: int, q0: int) -> ModeBasis:
    """Construct the sine-mode basis on a uniform trapezoid grid.

    Requires grid_points >= 4*(q0 + n_modes) so the fastest mode keeps at
    least ~8 samples per oscillation period.
    """
    if n_modes < 1:
        raise ValueError("n_modes must be >= 1")
    if q0 < 1:
        raise ValueError("q0 must be >= 1")
    required = 4 * (q0 + n_modes)
    if grid_points < required:
        worst = q0 + n_modes - 1
        raise ValueError(
            f"grid too coarse: mode {n_modes - 1} (universe index {worst}) needs "
            f"grid_points >= {required}, got {grid_points}"
        )
    grid = SpatialGrid.uniform(grid_points)
    q = q0 + np.arange(n_modes)
    frequencies = q * np.pi
    vacuum_amplitudes = np.sqrt(frequencies / 2.0)
    samples = np.stack([_sine_samples(int(qi), grid_points) for qi in q])
    return ModeBasis(
        grid=grid,
        n_modes=n_modes,
        mode_index_offset=q0,
        frequencies=frequencies,
        vacuum_amplitudes=vacuum_amplitudes,
        samples=samples,
    )


def inner_product(f: np.ndarray, g: np.ndarray, grid: SpatialGrid) -> complex:
    """Unconjugated inner product sum_i w_i f(x_i) g(x_i).

    Bilinear in both arguments; biorthogonality relations below are built on
    this unconjugated pairing, so no complex conjugate is taken.
    """
    f = np.asarray(f)
    g = np.asarray(g)
    if f.shape != g.shape or f.shape != grid.points.shape:
        raise ValueError(
            f"mismatched grid functions: f {f.shape}, g {g.shape}, grid {grid.points.shape}"
        )
    return complex(grid.integrate(f * g))


def helmholtz_residual(basis: ModeBasis, n: int) -> float:
    """Max-norm of (d^2/dx^2 + omega_n^2) u_n over interior grid points.

    The second derivative is spectral (DST-I of the interior samples), which
    is exact for any field in the span of the resolvable sine modes; requires
    the uniform grid produced by build_sine_basis.
    """
    if not 0 <= n < basis.n_modes:
        raise IndexError(f"mode index {n} out of range for {basis.n_modes} modes")
    pts = basis.grid.points
    spacing = np.diff(pts)
    if not np.allclose(spacing, spacing[0], rtol=0.0, atol=1e-12):
        raise ValueError("spectral residual requires a uniform grid")
    interior = basis.samples[n, 1:-1]
    wavenumbers = np.arange(1, interior.size + 1) * np.pi
    coeffs = dst(interior, type=1, norm="ortho")
    second = idst(-(wavenumbers**2) * coeffs, type=1, norm="ortho")
    return float(np.max(np.abs(second + basis.frequencies[n] ** 2 * interior)))
