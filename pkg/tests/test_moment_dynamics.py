import numpy as np
import pytest
import scipy.linalg

from exnoise import (
    DegenerateModeError,
    MomentState,
    build_drift_matrix,
    build_sine_basis,
    decompose_rates,
    diffusion_matrix,
    evolve_correlations,
    evolve_means,
    petermann_k_coeff,
    quadrature_variance,
    quasi_correlations,
    solve_quasimodes,
)

OMEGA2 = np.array([3.0, 4.0])
GAIN2 = np.array([[0.5, 0.2], [0.2, 0.4]])
LOSS2 = np.array([[0.6, -0.1], [-0.1, 0.5]])


def test_single_mode_mean_decay():
    gamma, omega = 0.8, 5.0
    a0 = np.array([1.0 + 0.5j])
    times, means = evolve_means(
        None, np.array([[gamma]]), np.array([omega]), a0, 2.0, dt=5e-4
    )
    expected = a0 * np.exp((-gamma / 2.0 - 1j * omega) * times[-1])
    assert np.max(np.abs(means[-1] - expected)) < 1e-8


def test_equal_gain_loss_preserves_magnitude():
    m = np.array([[0.3, 0.1], [0.1, 0.2]])
    a0 = np.array([1.0, -0.5j])
    times, means = evolve_means(m, m, OMEGA2, a0, 1.0, dt=1e-3)
    assert np.abs(np.linalg.norm(means[-1]) - np.linalg.norm(a0)) < 1e-9


def test_means_rk4_matches_matrix_exponential():
    a0 = np.array([0.3 - 0.2j, 0.8 + 0.1j])
    drift = 0.5 * (GAIN2 - LOSS2) - 1j * np.diag(OMEGA2)
    times, means = evolve_means(GAIN2, LOSS2, OMEGA2, a0, 1.0, dt=2.5e-4)
    oracle = scipy.linalg.expm(drift * times[-1]) @ a0
    assert np.max(np.abs(means[-1] - oracle)) < 1e-8


def test_means_rk4_matches_quasimode_path():
    a0 = np.array([0.3 - 0.2j, 0.8 + 0.1j])
    t_rk, rk = evolve_means(GAIN2, LOSS2, OMEGA2, a0, 1.0, dt=2.5e-4)
    t_qm, qm = evolve_means(GAIN2, LOSS2, OMEGA2, a0, 1.0, dt=2.5e-4, method="quasimode")
    assert np.allclose(t_rk, t_qm)
    scale = np.max(np.abs(qm[-1]))
    assert np.max(np.abs(rk[-1] - qm[-1])) < 1e-8 * scale


def test_amplifier_and_absorber_occupations():
    lam = 1.0
    for n0 in (0.0, 2.0):
        times, corrs = evolve_correlations(
            np.array([[lam]]), None, np.array([2.0]),
            np.array([[n0]], dtype=complex), "normal", 2.0, dt=5e-3,
        )
        expected = np.exp(lam * times) * (n0 + 1.0) - 1.0
        assert np.max(np.abs(corrs[:, 0, 0].real - expected)) < 1e-8 * max(
            1.0, expected[-1]
        )
    gamma, n0 = 0.7, 3.0
    times, corrs = evolve_correlations(
        None, np.array([[gamma]]), np.array([2.0]),
        np.array([[n0]], dtype=complex), "normal", 2.0, dt=5e-3,
    )
    expected = n0 * np.exp(-gamma * times)
    assert np.max(np.abs(corrs[:, 0, 0].real - expected)) < 1e-8


def test_commutator_is_preserved():
    rng = np.random.default_rng(21)
    n = 3
    omega = np.array([2.0, 2.5, 3.4])
    base = rng.normal(size=(n, n))
    gain = 0.1 * (base @ base.T)
    base2 = rng.normal(size=(n, n))
    loss = 0.12 * (base2 @ base2.T)
    normal0 = np.zeros((n, n), dtype=complex)
    anti0 = normal0 + np.eye(n)
    t_final = 10.0 / max(np.max(np.abs(gain)), np.max(np.abs(loss)))
    _, normals = evolve_correlations(gain, loss, omega, normal0, "normal", t_final)
    _, antis = evolve_correlations(gain, loss, omega, anti0, "antinormal", t_final)
    assert np.max(np.abs((antis[-1] - normals[-1]) - np.eye(n))) < 1e-9
    for c in (normals[-1], antis[-1]):
        assert np.max(np.abs(c - c.conj().T)) < 1e-10


def test_closed_system_is_stationary():
    omega = np.array([1.0, 2.0])
    corr0 = np.diag([0.3, 1.2]).astype(complex)
    times, corrs = evolve_correlations(None, None, omega, corr0, "normal", 5.0)
    assert np.max(np.abs(corrs[-1] - corr0)) < 1e-10
    a0 = np.array([1.0 + 0j, 0.5j])
    _, means = evolve_means(None, None, omega, a0, 5.0, dt=1e-3)
    assert np.max(np.abs(np.abs(means[-1]) - np.abs(a0))) < 1e-9


def test_diffusion_matrix_by_ordering():
    assert np.array_equal(diffusion_matrix(GAIN2, LOSS2, "normal"), GAIN2)
    assert np.array_equal(diffusion_matrix(GAIN2, LOSS2, "antinormal"), LOSS2)
    assert np.allclose(
        diffusion_matrix(GAIN2, LOSS2, "symmetric"), 0.5 * (GAIN2 + LOSS2)
    )
    with pytest.raises(ValueError):
        diffusion_matrix(GAIN2, LOSS2, "weyl")


def _toy_qset():
    basis = build_sine_basis(2, 1024, 2)
    return basis, solve_quasimodes(
        build_drift_matrix(basis, np.zeros((2, 2)), np.diag([0.2, 0.5]))
    )


def test_quasi_correlations_diagonal_drift_is_identity_map():
    basis, qset = _toy_qset()
    corr = np.array([[0.5, 0.1 + 0.2j], [0.1 - 0.2j, 1.5]])
    quasi = quasi_correlations(corr, qset)
    assert np.allclose(quasi, corr, atol=1e-10)


def test_quasi_correlations_hermitian_and_refusal():
    basis, qset = _toy_qset()
    corr = np.array([[0.5, 0.1 + 0.2j], [0.1 - 0.2j, 1.5]])
    quasi = quasi_correlations(corr, qset)
    assert np.max(np.abs(quasi - quasi.conj().T)) < 1e-10
    import dataclasses

    flagged = dataclasses.replace(qset, flags=np.array([True, False]))
    with pytest.raises(DegenerateModeError):
        quasi_correlations(corr, flagged)


def test_quasi_correlation_drive_matches_transform_derivative():
    """Finite difference of the transformed normal moments against the
    quasi-mode correlation ODE right side."""
    from exnoise import DriftMatrix

    gain = np.array([[0.5, 0.2], [0.2, 0.4]])
    loss = np.zeros((2, 2))
    drift = 0.5 * gain - 1j * np.diag(OMEGA2)
    qset = solve_quasimodes(
        DriftMatrix(matrix=drift, eps=np.ones(2), gain=gain, loss=loss)
    )
    h = 1e-4
    times, corrs = evolve_correlations(
        gain, loss, OMEGA2, np.zeros((2, 2), dtype=complex), "normal", 4 * h, dt=h / 8
    )

    def at(t):
        k = int(np.argmin(np.abs(times - t)))
        assert abs(times[k] - t) < 1e-12
        return quasi_correlations(corrs[k], qset)

    mid = at(2 * h)
    derivative = (at(3 * h) - at(h)) / (2 * h)
    lam, gam, om = (qset.amplification, qset.damping, qset.frequencies)
    e = np.sqrt(om / 2.0)
    b = qset.weighted
    drive = (b.conj().T @ gain @ b) / np.outer(e, e)
    decay = (
        0.5 * (lam[:, None] + lam[None, :] - gam[:, None] - gam[None, :])
        + 1j * (om[:, None] - om[None, :])
    )
    rhs = decay * mid + drive
    scale = np.max(np.abs(rhs))
    assert np.max(np.abs(derivative - rhs)) < 1e-8 * scale


def test_quadrature_variance_vacuum_zero_point():
    basis, qset = _toy_qset()
    state = MomentState(
        t=0.0, mean=np.zeros(2, dtype=complex), corr=0.5 * np.eye(2), ordering="symmetric"
    )
    for nu in range(2):
        expected = qset.frequencies[nu] / 2.0
        assert quadrature_variance(qset, state, nu, basis) == pytest.approx(
            expected, rel=1e-10
        )


def test_quadrature_variance_single_mode_gain_oracle():
    lam = 0.9
    basis = build_sine_basis(1, 1024, 3)
    qset = solve_quasimodes(
        build_drift_matrix(basis, np.array([[lam]]), np.zeros((1, 1)))
    )
    t_final = 1.2
    times, corrs = evolve_correlations(
        np.array([[lam]]), None, basis.frequencies,
        0.5 * np.eye(1, dtype=complex), "symmetric", t_final, dt=1e-3,
    )
    state = MomentState(
        t=times[-1], mean=np.zeros(1, dtype=complex), corr=corrs[-1], ordering="symmetric"
    )
    var = quadrature_variance(qset, state, 0, basis)
    # scalar symmetric moment: dC/dt = lam C + lam/2, C(0) = 1/2
    c_exact = np.exp(lam * times[-1]) - 0.5
    expected = (basis.frequencies[0] / 2.0) * 2.0 * c_exact
    assert var == pytest.approx(expected, rel=1e-8)


def test_quadrature_noise_ratio_recovers_k(near_ep_scenario):
    """Position-averaged added quadrature noise relative to the matched
    single-mode evolution equals the excess-noise factor."""
    basis, _, _, mats, qset = near_ep_scenario
    lam, gam, _ = decompose_rates(qset, mats.gain, mats.loss)
    dominant = int(np.argmax(lam - gam))
    t_final = 0.01
    times, corrs = evolve_correlations(
        mats.gain, mats.loss, basis.frequencies,
        0.5 * np.eye(2, dtype=complex), "symmetric", t_final,
    )
    mean0 = np.zeros(2, dtype=complex)

    def variance(k):
        state = MomentState(
            t=times[k], mean=mean0, corr=corrs[k], ordering="symmetric"
        )
        return quadrature_variance(qset, state, dominant, basis)

    net = lam[dominant] - gam[dominant]
    total = lam[dominant] + gam[dominant]
    added = variance(-1) - np.exp(net * times[-1]) * variance(0)
    e2 = qset.frequencies[dominant] / 2.0
    single_mode_added = e2 * total * (np.exp(net * times[-1]) - 1.0) / net
    ratio = added / single_mode_added
    k_expected = petermann_k_coeff(qset, dominant)
    assert ratio == pytest.approx(k_expected, rel=0.02)


def test_validation_errors():
    with pytest.raises(ValueError, match="Hermitian"):
        evolve_correlations(
            GAIN2, LOSS2, OMEGA2, np.array([[0.0, 1.0], [0.0, 0.0]]), "normal", 0.1
        )
    with pytest.raises(ValueError, match="ordering"):
        evolve_correlations(
            GAIN2, LOSS2, OMEGA2, np.eye(2, dtype=complex), "weyl", 0.1
        )
    with pytest.raises(ValueError, match="ordering"):
        MomentState(0.0, np.zeros(2), np.eye(2), "weyl")
    basis, qset = _toy_qset()
    state = MomentState(0.0, np.zeros(2), 0.5 * np.eye(2), "normal")
    with pytest.raises(ValueError, match="symmetric"):
        quadrature_variance(qset, state, 0, basis)


def test_step_size_warning():
    with pytest.warns(RuntimeWarning, match="resolution bound"):
        evolve_means(GAIN2, LOSS2, OMEGA2, np.zeros(2, dtype=complex), 1.0, dt=0.5)
