"""Biorthogonal quasi modes of the reservoir-coupled mode system.

The mean amplitudes evolve with the complex symmetric matrix

    A = (1/2)(L - Gamma) - i diag(omega),

and the physical eigenproblem is for M = D^-1 A D with D = diag(eps).  Solving
A instead of M buys the left eigenvectors for free: if A b = mu b then the
right eigenvector of M is c = b / eps and its left partner is eps^2 c = eps b,
with the unconjugated pairing

    sum_n eps_n^2 c_n^(nu) c_n^(mu) = delta_{nu,mu} s_nu,       s_nu = b^T b,

and the completeness relation sum_nu eps_n^2 c_n c_m / s_nu = delta_{nm}.

Each quasi mode carries an amplification rate, a damping rate and a frequency
(quadratic forms of L, Gamma and the frequency operator), and a Petermann
excess-noise factor

    K_nu = ( |b|^2 / |b^T b| )^2  >= 1,

which diverges at an exceptional point where b^T b -> 0.  Near-degenerate or
exceptional modes are flagged, never silently normalized; operations that
need a complete biorthogonal set refuse flagged sets.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .mode_basis import ModeBasis, SpatialGrid

__all__ = [
    "DegenerateModeError",
    "DriftMatrix",
    "QuasiModeSet",
    "build_drift_matrix",
    "solve_quasimodes",
    "solve_mode_operator",
    "decompose_rates",
    "petermann_k_coeff",
    "petermann_k_integral",
    "quasi_mode_functions",
    "project_to_quasimodes",
    "reconstruct_amplitudes",
]

# Relative eigenvalue spacing below which a pair is treated as degenerate, and
# relative biorthogonal norm below which a mode is at an exceptional point.
# Defective matrices split their eigenvalues by ~sqrt(machine eps) * scale in
# a backward-stable solver, so the degeneracy test also carries an absolute
# floor of that size; the norm threshold corresponds to K of order 1e12.
DEGENERACY_RTOL = 1e-8
DEGENERACY_FLOOR = 4.0 * np.sqrt(np.finfo(float).eps)
EXCEPTIONAL_RTOL = 1e-6


class DegenerateModeError(RuntimeError):
    """A flagged (near-degenerate or exceptional-point) quasi mode was required."""


@dataclass(frozen=True)
class DriftMatrix:
    """Complex symmetric drift A = (1/2)(L - Gamma) - i diag(omega) plus eps weights.

    gain and loss are kept so the solver can split the net rate 2 Re(mu) into
    the separate amplification and damping contributions.
    """

    matrix: np.ndarray
    eps: np.ndarray
    gain: Optional[np.ndarray] = None
    loss: Optional[np.ndarray] = None


def build_drift_matrix(basis: ModeBasis, gain: np.ndarray, loss: np.ndarray) -> DriftMatrix:
    """Validate the coupling matrices and assemble the drift matrix."""
    n = basis.n_modes
    gain = np.asarray(gain, dtype=float)
    loss = np.asarray(loss, dtype=float)
    for name, m in (("gain", gain), ("loss", loss)):
        if m.shape != (n, n):
            raise ValueError(f"{name} matrix shape {m.shape} does not match {n} modes")
        if not np.allclose(m, m.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(m).max())):
            raise ValueError(f"{name} matrix must be symmetric")
    gain = 0.5 * (gain + gain.T)
    loss = 0.5 * (loss + loss.T)
    a = 0.5 * (gain - loss) - 1j * np.diag(basis.frequencies)
    return DriftMatrix(matrix=a, eps=basis.vacuum_amplitudes.copy(), gain=gain, loss=loss)


@dataclass(frozen=True)
class QuasiModeSet:
    """Eigenvectors, rates and flags of one drift-matrix decomposition.

    coeffs holds the right eigenvectors c^(nu) as columns; the left vectors
    are eps^2 * coeffs and need no second eigensolve.  Modes are sorted by
    frequency, then by net rate.
    """

    eigenvalues: np.ndarray
    coeffs: np.ndarray
    eps: np.ndarray
    norms: np.ndarray
    frequencies: np.ndarray
    amplification: Optional[np.ndarray]
    damping: Optional[np.ndarray]
    flags: np.ndarray

    @property
    def n_modes(self) -> int:
        return self.eigenvalues.size

    @property
    def weighted(self) -> np.ndarray:
        """Columns b^(nu) = eps * c^(nu), the eigenvectors of the symmetric drift."""
        return self.eps[:, None] * self.coeffs

    @property
    def left_vectors(self) -> np.ndarray:
        """Columns eps^2 * c^(nu), the left eigenvectors of M."""
        return self.eps[:, None] ** 2 * self.coeffs

    @property
    def any_flagged(self) -> bool:
        return bool(np.any(self.flags))

    def require_complete(self) -> None:
        if self.any_flagged:
            bad = np.flatnonzero(self.flags).tolist()
            raise DegenerateModeError(
                f"quasi modes {bad} are flagged (near-degenerate or exceptional point)"
            )


def _eig_normal_parts(x: np.ndarray, y: np.ndarray):
    """Eigenbasis of a normal A = X + iY via one Hermitian solve.

    X and Y commute, so a real orthogonal basis diagonalizes both; any
    degenerate cluster of the mixing combination is degenerate in X and Y
    separately, where every orthogonal choice is valid.  The biorthogonal
    norms are exactly 1 and no flags are needed.
    """
    cx = 1.0 / (np.linalg.norm(x) + 1e-300)
    cy = (1.0 + np.sqrt(5.0)) / 2.0 / (np.linalg.norm(y) + 1e-300)
    _, vectors = np.linalg.eigh(cx * x + cy * y)
    mu = (
        np.einsum("ij,ij->j", vectors, x @ vectors)
        + 1j * np.einsum("ij,ij->j", vectors, y @ vectors)
    )
    return mu, vectors.astype(complex)


def _eig_complex_symmetric(a: np.ndarray):
    """Eigendecomposition with deterministic phase and degeneracy flags.

    Normal operators (commuting real and imaginary parts) get an orthonormal
    real eigenbasis, for which the excess-noise factor is exactly 1 and exact
    degeneracies are harmless; all other operators go through the general
    solver with near-degeneracy and exceptional-point flagging.
    """
    x = np.ascontiguousarray(a.real)
    y = np.ascontiguousarray(a.imag)
    commutator = x @ y - y @ x
    comm_tol = 1e-12 * (np.linalg.norm(x) * np.linalg.norm(y) + 1.0)
    normal = np.linalg.norm(commutator) <= comm_tol

    if normal:
        mu, vectors = _eig_normal_parts(x, y)
    else:
        try:
            mu, vectors = np.linalg.eig(a)
        except np.linalg.LinAlgError as err:
            cond = float(np.linalg.cond(a))
            raise np.linalg.LinAlgError(
                f"eigensolver failed on {a.shape[0]}x{a.shape[0]} drift matrix "
                f"(condition estimate {cond:.3e}): {err}"
            ) from err

    order = np.lexsort((mu.real, -mu.imag))  # frequency ascending, then net rate
    mu = mu[order]
    vectors = vectors[:, order]

    # Deterministic representative: largest-magnitude component real positive.
    idx = np.argmax(np.abs(vectors), axis=0)
    lead = vectors[idx, np.arange(vectors.shape[1])]
    phase = np.where(np.abs(lead) > 0.0, lead / np.abs(lead), 1.0)
    vectors = vectors / phase

    norms = np.einsum("ij,ij->j", vectors, vectors)
    herm = np.einsum("ij,ij->j", vectors.conj(), vectors).real

    if normal:
        flags = np.zeros(mu.size, dtype=bool)
        return mu, vectors, norms, flags

    flags = np.abs(norms) < EXCEPTIONAL_RTOL * herm
    scale = np.abs(mu)
    gap = np.abs(mu[:, None] - mu[None, :])
    tol = np.maximum(
        DEGENERACY_RTOL * np.maximum(scale[:, None], scale[None, :]),
        DEGENERACY_FLOOR * np.linalg.norm(a),
    )
    close = gap <= tol
    np.fill_diagonal(close, False)
    flags = flags | np.any(close, axis=1)
    return mu, vectors, norms, flags


def solve_mode_operator(
    matrix: np.ndarray,
    eps: Optional[np.ndarray] = None,
    gain: Optional[np.ndarray] = None,
    loss: Optional[np.ndarray] = None,
) -> QuasiModeSet:
    """Solve any complex symmetric mode operator A = P - i W.

    eps defaults to unit weights (grid-space operators).  When gain/loss
    quadratic-form matrices are supplied the per-mode amplification and
    damping rates are reported; the frequency is always the quadratic form of
    W = -Im(A), which coincides with -Im(mu) for true eigenvectors.
    """
    a = np.asarray(matrix, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"mode operator must be square, got {a.shape}")
    if not np.allclose(a, a.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(a).max())):
        raise ValueError("mode operator must be complex symmetric")
    n = a.shape[0]
    if eps is None:
        eps = np.ones(n)
    eps = np.asarray(eps, dtype=float)
    if eps.shape != (n,) or np.any(eps <= 0.0):
        raise ValueError("eps must be a positive vector matching the operator size")

    mu, b, norms, flags = _eig_complex_symmetric(a)
    herm = np.einsum("ij,ij->j", b.conj(), b).real

    w_op = -a.imag
    frequencies = np.einsum("ij,ij->j", b.conj(), w_op @ b).real / herm

    amplification = damping = None
    if gain is not None and loss is not None:
        amplification = np.einsum("ij,ij->j", b.conj(), gain @ b).real / herm
        damping = np.einsum("ij,ij->j", b.conj(), loss @ b).real / herm

    return QuasiModeSet(
        eigenvalues=mu,
        coeffs=b / eps[:, None],
        eps=eps,
        norms=norms,
        frequencies=frequencies,
        amplification=amplification,
        damping=damping,
        flags=flags,
    )


def solve_quasimodes(drift: DriftMatrix) -> QuasiModeSet:
    """Biorthogonal decomposition of a drift matrix."""
    return solve_mode_operator(drift.matrix, drift.eps, drift.gain, drift.loss)


def decompose_rates(qset: QuasiModeSet, gain: np.ndarray, loss: np.ndarray):
    """Per-mode (amplification, damping, frequency) from the rate quadratic forms.

    amplification_nu - damping_nu equals 2 Re(mu_nu) and frequency_nu equals
    -Im(mu_nu) for any true eigenvector; all three are real.
    """
    b = qset.weighted
    herm = np.einsum("ij,ij->j", b.conj(), b).real
    if np.any(herm <= 0.0):
        raise ValueError("zero-norm eigenvector in quasi-mode set")
    lam = np.einsum("ij,ij->j", b.conj(), np.asarray(gain, dtype=float) @ b).real / herm
    gam = np.einsum("ij,ij->j", b.conj(), np.asarray(loss, dtype=float) @ b).real / herm
    return lam, gam, qset.frequencies.copy()


def petermann_k_coeff(qset: QuasiModeSet, nu: int) -> float:
    """Excess-noise factor K_nu = (|b|^2 / |b^T b|)^2 in coefficient form.

    Reported as inf for flagged modes, where the biorthogonal norm collapses
    and the factor diverges.
    """
    b = qset.weighted[:, nu]
    if qset.flags[nu]:
        return float("inf")
    denom = abs(np.sum(b * b))
    return float((np.sum(np.abs(b) ** 2) / denom) ** 2)


def quasi_mode_functions(qset: QuasiModeSet, basis: ModeBasis):
    """Quasi-mode functions U_nu and their adjoints Ubar_nu on the basis grid.

    U_nu = sum_n (eps_n^2 c_n / s_nu) u_n and Ubar_nu = sum_n c_n u_n, so that
    (1/V) integral U_nu Ubar_mu dx = delta_{nu,mu}.
    """
    if qset.eps.size != basis.n_modes:
        raise ValueError("quasi-mode set dimension does not match the basis")
    right = (qset.eps[:, None] ** 2 * qset.coeffs) / qset.norms[None, :]
    u_fns = right.T @ basis.samples
    ubar_fns = qset.coeffs.T @ basis.samples
    return u_fns, ubar_fns


def petermann_k_integral(u_fn: np.ndarray, ubar_fn: np.ndarray, grid: SpatialGrid) -> float:
    """Excess-noise factor in the position-space form.

    K = [ integral |U|^2 * integral |Ubar|^2 ] / | integral U Ubar |^2, the
    commonly used overlap-integral expression; >= 1 by Cauchy-Schwarz.
    """
    norm_u = grid.integrate(np.abs(u_fn) ** 2).real
    norm_ubar = grid.integrate(np.abs(ubar_fn) ** 2).real
    cross = abs(grid.integrate(u_fn * ubar_fn))
    return float(norm_u * norm_ubar / cross**2)


def _quasi_vacuum_amplitudes(qset: QuasiModeSet) -> np.ndarray:
    omega = qset.frequencies
    if np.any(omega <= 0.0):
        raise ValueError("quasi-mode frequencies must be positive for projection")
    return np.sqrt(omega / 2.0)


def project_to_quasimodes(amplitudes: np.ndarray, qset: QuasiModeSet) -> np.ndarray:
    """Quasi amplitudes A_nu = (1/E_nu) sum_n c_n eps_n a_n, E_nu = sqrt(Omega_nu/2)."""
    qset.require_complete()
    amplitudes = np.asarray(amplitudes, dtype=complex)
    if amplitudes.shape != (qset.n_modes,):
        raise ValueError("amplitude vector does not match the quasi-mode set")
    return (qset.weighted.T @ amplitudes) / _quasi_vacuum_amplitudes(qset)


def reconstruct_amplitudes(quasi_amplitudes: np.ndarray, qset: QuasiModeSet) -> np.ndarray:
    """Inverse transform a_n = eps_n sum_nu (c_n E_nu / s_nu) A_nu."""
    qset.require_complete()
    quasi_amplitudes = np.asarray(quasi_amplitudes, dtype=complex)
    if quasi_amplitudes.shape != (qset.n_modes,):
        raise ValueError("quasi-amplitude vector does not match the quasi-mode set")
    coeffs = _quasi_vacuum_amplitudes(qset) * quasi_amplitudes / qset.norms
    return qset.weighted @ coeffs
