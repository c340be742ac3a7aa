"""Semiclassical Langevin ensembles and field-level noise propagation.

Trajectories follow the c-number Langevin equation

    da = [ (1/2)(L - Gamma) - i diag(omega) ] a dt + dW,

with complex Gaussian increments of covariance <dW_m conj(dW_n)> =
(1/2)(L + Gamma)_{mn} dt and zero anomalous correlations: gain and loss add
for the noise while they subtract for the amplification.  The ensemble
therefore realizes symmetric-ordered moments.  Every trajectory owns a
counter-based random stream keyed by (seed, trajectory index), so results are
bit-identical regardless of chunking or thread count.

Field-level operations expand the positive-frequency field in quasi modes:
the propagator resums E(x, t) = sum_nu exp(mu_nu t) U_nu(x) (1/V) integral
Ubar_nu E0, and the accumulated reservoir noise after time t is the double
sum over quasi-mode pairs with the kernel (exp(z t) - 1)/z,
z = mu_nu + conj(mu_mu), which degenerates smoothly to t at z = 0.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence
import math
import warnings

import numpy as np

from .mode_basis import ModeBasis
from .quasimodes import QuasiModeSet, petermann_k_integral, quasi_mode_functions
from .reservoir_coupling import RateProfile, segment_overlap_matrix

__all__ = [
    "TrajectoryEnsemble",
    "EnsembleMoments",
    "FieldState",
    "AccumulatedNoise",
    "simulate_ensemble",
    "ensemble_moments",
    "field_variance",
    "propagate_green",
    "accumulated_noise_variance",
    "hertzian_kernel",
]


@dataclass(frozen=True)
class TrajectoryEnsemble:
    """Monte-Carlo set of complex mode amplitudes at the sampled times.

    amplitudes has shape (n_traj, n_samples, n_modes); the ordering of the
    realized moments is fixed to symmetric by the noise recipe.
    """

    n_traj: int
    seed: int
    dt: float
    times: np.ndarray
    amplitudes: np.ndarray
    ordering: str = field(default="symmetric")


@dataclass(frozen=True)
class EnsembleMoments:
    """Sample mean and raw symmetric second moments with standard errors."""

    times: np.ndarray
    mean: np.ndarray
    mean_se: np.ndarray
    corr: np.ndarray
    corr_se: np.ndarray


@dataclass(frozen=True)
class FieldState:
    """Positive-frequency field samples on the basis grid at one time."""

    samples: np.ndarray
    t: float = 0.0


def _noise_factor(sigma: np.ndarray) -> Optional[np.ndarray]:
    """Real factor F with F F^T = sigma, or None for zero noise."""
    if not np.any(sigma):
        return None
    try:
        return np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        pass
    w, v = np.linalg.eigh(sigma)
    floor = -1e-10 * max(w.max(), 1.0)
    if w.min() < floor:
        raise np.linalg.LinAlgError(
            f"diffusion matrix is not positive semidefinite: eigenvalue {w.min():.6e}"
        )
    return v * np.sqrt(np.clip(w, 0.0, None))


def simulate_ensemble(
    gain,
    loss,
    omega,
    a0,
    t_final: float,
    dt: float,
    n_traj: int,
    seed: int,
    sample_stride: Optional[int] = None,
    chunk_size: int = 2048,
    n_threads: int = 1,
) -> TrajectoryEnsemble:
    """Euler-Maruyama ensemble of the c-number Langevin equation.

    Update per step: a <- a + dt*A a + sqrt(dt)*xi with xi complex Gaussian of
    covariance (1/2)(L + Gamma).  Every trajectory starts exactly at a0 and
    draws from its own Philox stream keyed by (seed, index); chunk_size and
    n_threads are performance knobs that do not change the output.
    """
    omega = np.asarray(omega, dtype=float)
    n = omega.size
    gain = np.zeros((n, n)) if gain is None else np.asarray(gain, dtype=float)
    loss = np.zeros((n, n)) if loss is None else np.asarray(loss, dtype=float)
    a0 = np.asarray(a0, dtype=complex)
    if a0.shape != (n,):
        raise ValueError("initial amplitudes do not match omega")
    if n_traj < 1:
        raise ValueError("n_traj must be >= 1")
    if not 0 <= int(seed) < 2**64:
        raise ValueError("seed must fit in 64 bits")
    if dt <= 0.0 or t_final <= 0.0:
        raise ValueError("dt and t_final must be positive")

    rate = max(np.max(np.abs(gain)), np.max(np.abs(loss)), 1e-300)
    limit = 0.02 / max(np.max(np.abs(omega)), rate)
    if dt > limit:
        warnings.warn(
            f"dt={dt:.3e} does not resolve the fastest scale (bound {limit:.3e})",
            RuntimeWarning,
            stacklevel=2,
        )

    drift = 0.5 * (gain - loss) - 1j * np.diag(omega)
    factor = _noise_factor(0.5 * (gain + loss))
    n_steps = max(1, int(round(t_final / dt)))
    stride = sample_stride if sample_stride else max(1, -(-n_steps // 256))
    sample_steps = np.arange(0, n_steps + 1, stride)
    if sample_steps[-1] != n_steps:
        sample_steps = np.append(sample_steps, n_steps)
    times = sample_steps * dt

    amplitudes = np.empty((n_traj, sample_steps.size, n), dtype=complex)

    # The update a_{k+1} = a_k P + xi_k with P = I + dt A is evaluated in
    # blocks: over a segment of L steps,
    #     a_end = a_start P^L + sum_k xi_k P^(L-1-k),
    # which is the same recursion reassociated so the noise sum becomes one
    # matrix product.  Segment boundaries sit on the sample steps (capped for
    # memory), so the recorded amplitudes are those of the stepped scheme.
    step_p = np.eye(n, dtype=complex) + dt * drift
    kick = math.sqrt(dt) / math.sqrt(2.0)
    max_segment = 1024
    segments = []
    prev = 0
    for target in sample_steps[1:] if sample_steps[0] == 0 else sample_steps:
        while target - prev > max_segment:
            segments.append((max_segment, False))
            prev += max_segment
        segments.append((target - prev, True))
        prev = target

    max_len = max((length for length, _ in segments), default=1)
    powers = np.empty((max_len + 1, n, n), dtype=complex)
    powers[0] = np.eye(n)
    for j in range(1, max_len + 1):
        powers[j] = powers[j - 1] @ step_p

    kernels = {}
    if factor is not None:
        mix = kick * factor.T
        for length in {length for length, _ in segments}:
            # row block k carries xi_k through the remaining L-1-k steps
            stack = np.stack(
                [mix @ powers[length - 1 - k].T for k in range(length)]
            )
            kernels[length] = np.ascontiguousarray(stack.reshape(length * n, n))

    def run_chunk(lo: int, hi: int) -> None:
        m = hi - lo
        gens = [
            np.random.Generator(
                np.random.Philox(key=np.array([seed, k], dtype=np.uint64))
            )
            for k in range(lo, hi)
        ]
        a = np.tile(a0, (m, 1))
        z = None if factor is None else np.empty((m, max_len, 2, n))
        ptr = 0
        if sample_steps[0] == 0:
            amplitudes[lo:hi, 0] = a
            ptr = 1
        for length, is_sample in segments:
            a = a @ powers[length].T
            if factor is not None:
                view = z[:, :length]
                for g, row in zip(gens, view):
                    g.standard_normal(out=row.reshape(-1))
                xi = view[:, :, 0, :] + 1j * view[:, :, 1, :]
                a += xi.reshape(m, length * n) @ kernels[length]
            if is_sample:
                amplitudes[lo:hi, ptr] = a
                ptr += 1

    chunk_size = max(1, int(chunk_size))
    bounds = [(lo, min(lo + chunk_size, n_traj)) for lo in range(0, n_traj, chunk_size)]
    if n_threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            list(pool.map(lambda b: run_chunk(*b), bounds))
    else:
        for lo, hi in bounds:
            run_chunk(lo, hi)

    return TrajectoryEnsemble(
        n_traj=n_traj, seed=int(seed), dt=dt, times=times, amplitudes=amplitudes
    )


def ensemble_moments(ens: TrajectoryEnsemble) -> EnsembleMoments:
    """Unbiased sample mean and raw second moments <conj(a_n) a_m> with SEs.

    Standard errors combine the real and imaginary scatter of each entry; the
    reduction order over trajectories is fixed.
    """
    if ens.n_traj < 2:
        raise ValueError("at least two trajectories are needed for moment estimates")
    amps = ens.amplitudes
    n_traj = ens.n_traj
    bias = n_traj / (n_traj - 1.0)

    mean = amps.mean(axis=0)
    mean_var = (np.abs(amps) ** 2).mean(axis=0) - np.abs(mean) ** 2
    mean_se = np.sqrt(np.clip(mean_var, 0.0, None) * bias / n_traj)

    corr = np.einsum("ksn,ksm->snm", amps.conj(), amps) / n_traj
    power = np.abs(amps) ** 2
    second = np.einsum("ksn,ksm->snm", power, power) / n_traj
    corr_var = second - np.abs(corr) ** 2
    corr_se = np.sqrt(np.clip(corr_var, 0.0, None) * bias / n_traj)
    return EnsembleMoments(
        times=ens.times.copy(), mean=mean, mean_se=mean_se, corr=corr, corr_se=corr_se
    )


def field_variance(ens: TrajectoryEnsemble, eps: np.ndarray):
    """Position-averaged variance of the real field, per sample time.

    For the orthonormal mode expansion the average collapses to mode sums:
    (1/V) integral <(E+ + E-)^2> dx = 2 sum_n eps_n^2 (<|a_n|^2> + Re<a_n^2>).
    Returns (variance, standard_error) arrays.
    """
    if ens.n_traj < 2:
        raise ValueError("at least two trajectories are needed for variance estimates")
    eps2 = np.asarray(eps, dtype=float) ** 2
    per_traj = 2.0 * ((np.abs(ens.amplitudes) ** 2 + np.real(ens.amplitudes**2)) @ eps2)
    var = per_traj.mean(axis=0)
    scatter = per_traj.std(axis=0, ddof=1)
    return var, scatter / math.sqrt(ens.n_traj)


def propagate_green(
    qset: QuasiModeSet, basis: ModeBasis, state: FieldState, t: float
) -> FieldState:
    """Propagate a field through the quasi-mode Green function for a time t.

    Projects onto the adjoint functions, scales each quasi amplitude by
    exp(mu_nu t), and resums; at t = 0 this is the identity on the span of
    the basis (completeness).
    """
    qset.require_complete()
    samples = np.asarray(state.samples, dtype=complex)
    if samples.shape != basis.grid.points.shape:
        raise ValueError("field samples do not match the basis grid")
    u_fns, ubar_fns = quasi_mode_functions(qset, basis)
    weights = basis.grid.weights
    projections = ubar_fns @ (weights * samples)
    evolved = np.exp(qset.eigenvalues * t) * projections
    return FieldState(samples=evolved @ u_fns, t=state.t + t)


def _interval_kernel(z: complex, t: float) -> complex:
    """(exp(z t) - 1)/z with the removable singularity at z = 0."""
    zt = z * t
    if abs(zt) < 1e-6:
        return t * (1.0 + zt / 2.0 + zt * zt / 6.0)
    return (np.exp(zt) - 1.0) / z


@dataclass(frozen=True)
class AccumulatedNoise:
    """Closed-form accumulated noise: full double sum and one-mode reduction."""

    total: float
    single_mode: float
    dominant: int


def accumulated_noise_variance(
    qset: QuasiModeSet,
    basis: ModeBasis,
    profiles: Sequence[RateProfile],
    t: float,
) -> AccumulatedNoise:
    """Position-averaged accumulated reservoir noise at time t.

    Evaluates omega_bar^3 * sum_{nu,mu} kernel_{nu,mu}(t) * I1 * I2 with
    overlap integrals I1 = (1/V) integral U_nu conj(U_mu) and I2 =
    (1/V) integral Ubar_nu R_tot conj(Ubar_mu); R_tot is the summed
    position-space rate (omega_bar/2) * rho of the supplied profiles, since
    amplification and damping add for the noise.  The returned single-mode
    reduction keeps only the dominant (largest net gain) quasi mode, with
    prefactor (lambda + gamma) * K.
    """
    qset.require_complete()
    if qset.amplification is None or qset.damping is None:
        raise ValueError("quasi-mode set carries no rate split; solve with gain and loss")
    omega_bar = basis.omega_bar
    u_fns, ubar_fns = quasi_mode_functions(qset, basis)
    weights = basis.grid.weights

    overlap_u = (u_fns * weights) @ u_fns.conj().T

    total_density = np.zeros((basis.n_modes, basis.n_modes))
    for profile in profiles:
        for s in profile.segments:
            total_density += s.density * segment_overlap_matrix(basis, s.x_min, s.x_max)
    rate_overlap = 0.5 * omega_bar * (qset.coeffs.T @ total_density @ qset.coeffs.conj())

    mu = qset.eigenvalues
    z = mu[:, None] + mu.conj()[None, :]
    kernels = np.array(
        [[_interval_kernel(z[i, j], t) for j in range(mu.size)] for i in range(mu.size)]
    )
    total = float(np.sum(kernels * overlap_u * rate_overlap).real * omega_bar**3)

    net = 2.0 * mu.real
    dominant = int(np.argmax(net))
    k_int = petermann_k_integral(u_fns[dominant], ubar_fns[dominant], basis.grid)
    lam = float(qset.amplification[dominant])
    gam = float(qset.damping[dominant])
    kernel_d = _interval_kernel(complex(lam - gam), t).real
    single = float(omega_bar**3 * kernel_d * (lam + gam) * k_int)
    return AccumulatedNoise(total=total, single_mode=single, dominant=dominant)


def hertzian_kernel(delta_omega: float, omega_bar: float, tau: float):
    """Finite-bandwidth reservoir correlation kernel, exact and approximate.

    The exact kernel integrates the white-noise correlator over a band of
    width delta_omega around omega_bar:

        exact  = sin(delta_omega tau / 2) / (pi tau) * cos(omega_bar tau)
        approx = delta_omega / (2 pi) * cos(omega_bar tau)

    Both equal delta_omega/(2 pi) at tau = 0; the approximation holds for
    |tau| < 1/delta_omega with error at most delta_omega^3 tau^2 / (48 pi).
    """
    if delta_omega < 0.0:
        raise ValueError("delta_omega must be nonnegative")
    envelope = np.cos(omega_bar * tau)
    exact = delta_omega / (2.0 * np.pi) * np.sinc(delta_omega * tau / (2.0 * np.pi)) * envelope
    approx = delta_omega / (2.0 * np.pi) * envelope
    return float(exact), float(approx)
