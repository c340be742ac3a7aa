"""Exact first- and second-moment evolution of the linearly coupled modes.

Means obey d<a>/dt = A <a> with the complex symmetric drift A.  The
correlation matrix C (indexed C[n, m]) obeys, for every ordering,

    dC/dt = S C + C S + i (W C - C W) + drive,

with S = (1/2)(L - Gamma), W = diag(omega), and an ordering-dependent drive:
L for normal order <adag_n a_m>, Gamma for antinormal order <a_m adag_n>, and
(L + Gamma)/2 for symmetric order.  The drive matrices are exactly the
doubled diffusion coefficients of the equivalent Langevin picture, so the
antinormal-minus-normal commutator stays the identity for all times.

Anomalous moments <a a> have no drive (the noise sources have zero anomalous
correlations) and stay zero for vacuum, thermal, or coherent initial states;
they are therefore not carried.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional
import warnings

import numpy as np

from .mode_basis import ModeBasis
from .quasimodes import (
    DegenerateModeError,
    QuasiModeSet,
    quasi_mode_functions,
    _eig_complex_symmetric,
)

__all__ = [
    "ORDERINGS",
    "MomentState",
    "diffusion_matrix",
    "evolve_means",
    "evolve_correlations",
    "quasi_correlations",
    "quadrature_variance",
    "default_timestep",
]

ORDERINGS = ("normal", "antinormal", "symmetric")


@dataclass(frozen=True)
class MomentState:
    """First moments and one second-moment matrix at a single time."""

    t: float
    mean: np.ndarray
    corr: np.ndarray
    ordering: str
    basis: Optional[ModeBasis] = None

    def __post_init__(self):
        if self.ordering not in ORDERINGS:
            raise ValueError(f"ordering must be one of {ORDERINGS}, got {self.ordering!r}")


def diffusion_matrix(gain: np.ndarray, loss: np.ndarray, ordering: str) -> np.ndarray:
    """Doubled diffusion coefficients driving the chosen ordering.

    normal -> L, antinormal -> Gamma, symmetric -> (L + Gamma)/2.
    """
    gain = np.asarray(gain, dtype=float)
    loss = np.asarray(loss, dtype=float)
    if ordering == "normal":
        return gain.copy()
    if ordering == "antinormal":
        return loss.copy()
    if ordering == "symmetric":
        return 0.5 * (gain + loss)
    raise ValueError(f"ordering must be one of {ORDERINGS}, got {ordering!r}")


def default_timestep(omega: np.ndarray, gain, loss) -> float:
    """Fixed RK4 step resolving both the fastest phase and the fastest rate."""
    omega = np.asarray(omega, dtype=float)
    w_max = max(np.max(np.abs(omega)), 1e-300)
    rate = 1e-300
    for m in (gain, loss):
        if m is not None:
            rate = max(rate, float(np.max(np.abs(m))))
    return min(0.05 / w_max, 0.01 / rate)


def _drift(gain, loss, omega, n):
    gain = np.zeros((n, n)) if gain is None else np.asarray(gain, dtype=float)
    loss = np.zeros((n, n)) if loss is None else np.asarray(loss, dtype=float)
    omega = np.asarray(omega, dtype=float)
    if omega.shape != (n,) or gain.shape != (n, n) or loss.shape != (n, n):
        raise ValueError("omega, gain, and loss dimensions are inconsistent")
    return gain, loss, 0.5 * (gain - loss) - 1j * np.diag(omega)


def _check_step(dt: float, omega, gain, loss) -> None:
    limit = 2.0 * default_timestep(omega, gain, loss)
    if dt > limit:
        warnings.warn(
            f"step dt={dt:.3e} exceeds the resolution bound {limit:.3e}; "
            "results may be inaccurate",
            RuntimeWarning,
            stacklevel=3,
        )


def _sample_steps(n_steps: int, limit: int = 512) -> np.ndarray:
    stride = max(1, -(-n_steps // limit))
    steps = np.arange(0, n_steps + 1, stride)
    if steps[-1] != n_steps:
        steps = np.append(steps, n_steps)
    return steps


def evolve_means(
    gain,
    loss,
    omega,
    mean0: np.ndarray,
    t_final: float,
    dt: Optional[float] = None,
    method: str = "rk4",
):
    """Evolve <a> to t_final; returns (times, means) with means[k] = <a>(times[k]).

    method "rk4" integrates with a fixed step; method "quasimode" expands the
    initial vector in the quasi modes of the drift and propagates each
    amplitude by exp(mu t) (exact, but refuses flagged decompositions).
    """
    mean0 = np.asarray(mean0, dtype=complex)
    n = mean0.size
    gain, loss, a = _drift(gain, loss, omega, n)

    if method == "quasimode":
        mu, b, norms, flags = _eig_complex_symmetric(a)
        if np.any(flags):
            raise DegenerateModeError(
                "quasi-mode propagation needs a complete biorthogonal set"
            )
        coeffs = (b.T @ mean0) / norms
        dt = dt if dt is not None else default_timestep(omega, gain, loss)
        n_steps = max(1, int(round(t_final / dt)))
        times = _sample_steps(n_steps) * (t_final / n_steps)
        means = np.stack([b @ (np.exp(mu * t) * coeffs) for t in times])
        return times, means
    if method != "rk4":
        raise ValueError(f"unknown method {method!r}")

    dt = dt if dt is not None else default_timestep(omega, gain, loss)
    _check_step(dt, omega, gain, loss)
    n_steps = max(1, int(round(t_final / dt)))
    h = t_final / n_steps
    steps = _sample_steps(n_steps)
    times = steps * h
    means = np.empty((steps.size, n), dtype=complex)
    y = mean0.copy()
    ptr = 0
    if steps[0] == 0:
        means[0] = y
        ptr = 1
    for k in range(1, n_steps + 1):
        k1 = a @ y
        k2 = a @ (y + 0.5 * h * k1)
        k3 = a @ (y + 0.5 * h * k2)
        k4 = a @ (y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if ptr < steps.size and steps[ptr] == k:
            means[ptr] = y
            ptr += 1
    return times, means


def evolve_correlations(
    gain,
    loss,
    omega,
    corr0: np.ndarray,
    ordering: str,
    t_final: float,
    dt: Optional[float] = None,
):
    """Evolve one second-moment matrix; returns (times, corrs).

    corr0 must be Hermitian; Hermiticity is re-imposed after every step so the
    only drift is roundoff.
    """
    corr0 = np.asarray(corr0, dtype=complex)
    n = corr0.shape[0]
    if corr0.shape != (n, n):
        raise ValueError("corr0 must be square")
    if not np.allclose(corr0, corr0.conj().T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(corr0).max())):
        raise ValueError("corr0 must be Hermitian")
    gain, loss, _ = _drift(gain, loss, omega, n)
    s = 0.5 * (gain - loss)
    w = np.asarray(omega, dtype=float)
    drive = diffusion_matrix(gain, loss, ordering)

    def rhs(c):
        sc = s @ c
        wc = 1j * (w[:, None] * c - c * w[None, :])
        return sc + sc.conj().T + wc + drive

    dt = dt if dt is not None else default_timestep(omega, gain, loss)
    _check_step(dt, omega, gain, loss)
    n_steps = max(1, int(round(t_final / dt)))
    h = t_final / n_steps
    steps = _sample_steps(n_steps)
    times = steps * h
    corrs = np.empty((steps.size, n, n), dtype=complex)
    c = corr0.copy()
    ptr = 0
    if steps[0] == 0:
        corrs[0] = c
        ptr = 1
    for k in range(1, n_steps + 1):
        k1 = rhs(c)
        k2 = rhs(c + 0.5 * h * k1)
        k3 = rhs(c + 0.5 * h * k2)
        k4 = rhs(c + h * k3)
        c = c + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        c = 0.5 * (c + c.conj().T)
        if ptr < steps.size and steps[ptr] == k:
            corrs[ptr] = c
            ptr += 1
    return times, corrs


def quasi_correlations(corr: np.ndarray, qset: QuasiModeSet) -> np.ndarray:
    """Transform a bare-mode correlation matrix to quasi-mode correlations.

    Entry [nu, mu] is <Adag_nu A_mu> (same ordering as the input), obtained
    from the congruence with the weighted eigenvectors and the quasi-mode
    vacuum amplitudes E_nu = sqrt(Omega_nu / 2).
    """
    qset.require_complete()
    corr = np.asarray(corr, dtype=complex)
    n = qset.n_modes
    if corr.shape != (n, n):
        raise ValueError("correlation matrix does not match the quasi-mode set")
    b = qset.weighted
    e = np.sqrt(qset.frequencies / 2.0)
    return (b.conj().T @ corr @ b) / np.outer(e, e)


def quadrature_variance(
    qset: QuasiModeSet, state: MomentState, nu: int, basis: ModeBasis
) -> float:
    """Position-averaged variance of the quadrature of quasi mode nu.

    Uses the central symmetric moments only: with anomalous central moments
    identically zero (no squeezing drive), the variance is

        Var = E_nu^2 * [(1/V) integral |U_nu|^2 dx] * 2 <Adag_nu A_nu>_sym,c,

    which reduces to the zero-point value E_nu^2 for a vacuum single mode.
    """
    if state.ordering != "symmetric":
        raise ValueError("quadrature variance needs symmetric-ordering correlations")
    if qset.flags[nu]:
        raise DegenerateModeError(
            f"quasi mode {nu} is flagged; its quadrature variance diverges"
        )
    central = state.corr - np.outer(state.mean.conj(), state.mean)
    quasi = quasi_correlations(central, qset)
    e2 = qset.frequencies[nu] / 2.0
    u_fns, _ = quasi_mode_functions(qset, basis)
    weight = basis.grid.integrate(np.abs(u_fns[nu]) ** 2).real
    return float(e2 * weight * 2.0 * quasi[nu, nu].real)
