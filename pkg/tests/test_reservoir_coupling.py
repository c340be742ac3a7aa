import numpy as np
import pytest
from scipy.integrate import quad

from exnoise import (
    RateProfile,
    Segment,
    build_coupling_matrices,
    build_sine_basis,
    coupling_matrix,
    position_rate,
    segment_overlap_matrix,
)


def test_constant_profile_gives_diagonal_matrix():
    basis = build_sine_basis(4, 2048, 3)
    profile = RateProfile("loss", [(0.0, 1.0, 0.7)])
    m = coupling_matrix(basis, profile)
    expected = np.diag(0.7 * basis.vacuum_amplitudes**2)
    assert np.max(np.abs(m - expected)) < 1e-10


def test_half_interval_off_diagonal_analytic():
    basis = build_sine_basis(2, 1024, 1)
    gamma0 = 1.3
    profile = RateProfile("gain", [(0.0, 0.5, gamma0)])
    m = coupling_matrix(basis, profile)
    eps = basis.vacuum_amplitudes
    # integral of 2 sin(pi x) sin(2 pi x) over [0, 1/2] equals 4/(3 pi)
    expected = gamma0 * eps[0] * eps[1] * 4.0 / (3.0 * np.pi)
    assert m[0, 1] == pytest.approx(expected, rel=1e-12)
    oracle, _ = quad(
        lambda x: 2.0 * np.sin(np.pi * x) * np.sin(2.0 * np.pi * x), 0.0, 0.5
    )
    assert m[0, 1] == pytest.approx(gamma0 * eps[0] * eps[1] * oracle, rel=1e-10)


def test_empty_profile_gives_zero_matrix():
    basis = build_sine_basis(3, 1024, 1)
    m = coupling_matrix(basis, RateProfile("gain", []))
    assert np.all(m == 0.0)


def test_overlapping_segments_rejected_naming_both():
    with pytest.raises(ValueError, match=r"\[0.1, 0.4\).*\[0.3, 0.6\)"):
        RateProfile("gain", [(0.1, 0.4, 1.0), (0.3, 0.6, 2.0)])


def test_touching_segments_allowed():
    profile = RateProfile("gain", [(0.0, 0.5, 1.0), (0.5, 1.0, 2.0)])
    assert len(profile.segments) == 2


def test_segment_validation():
    with pytest.raises(ValueError):
        Segment(0.5, 0.4, 1.0)
    with pytest.raises(ValueError):
        Segment(-0.1, 0.4, 1.0)
    with pytest.raises(ValueError):
        Segment(0.1, 0.4, -1.0)
    with pytest.raises(ValueError):
        RateProfile("pump", [(0.0, 1.0, 1.0)])


def test_coupling_matrices_positive_semidefinite():
    rng = np.random.default_rng(7)
    basis = build_sine_basis(6, 2048, 40)
    for _ in range(10):
        edges = np.sort(rng.uniform(0.0, 1.0, size=6))
        segments = [
            (edges[2 * i], edges[2 * i + 1], rng.uniform(0.0, 0.2)) for i in range(3)
        ]
        m = coupling_matrix(basis, RateProfile("gain", segments))
        assert np.min(np.linalg.eigvalsh(m)) >= -1e-12
        assert np.array_equal(m, m.T)


def test_linearity_in_the_density():
    basis = build_sine_basis(3, 1024, 5)
    p1 = RateProfile("gain", [(0.0, 0.3, 2.0)])
    p2 = RateProfile("gain", [(0.2, 0.55, 1.0)])
    merged = RateProfile(
        "gain", [(0.0, 0.2, 2.0), (0.2, 0.3, 3.0), (0.3, 0.55, 1.0)]
    )
    total = coupling_matrix(basis, merged)
    parts = coupling_matrix(basis, p1) + coupling_matrix(basis, p2)
    assert np.max(np.abs(total - parts)) < 1e-12


def test_position_rate_values():
    profile = RateProfile("gain", [(0.2, 0.4, 3.0)])
    omega_bar = 200.0 * np.pi
    assert position_rate(profile, 0.3, omega_bar) == pytest.approx(300.0 * np.pi)
    assert position_rate(profile, 0.5, omega_bar) == 0.0
    # boundary belongs to the left-closed segment starting there
    two = RateProfile("gain", [(0.2, 0.4, 3.0), (0.4, 0.7, 5.0)])
    assert position_rate(two, 0.4, omega_bar) == pytest.approx(2.5 * omega_bar)
    assert position_rate(two, 0.7, omega_bar) == 0.0
    with pytest.raises(ValueError):
        position_rate(profile, 1.5, omega_bar)


def test_segment_overlap_matrix_against_quadrature():
    basis = build_sine_basis(3, 1024, 2)
    t = segment_overlap_matrix(basis, 0.15, 0.85)
    q = basis.mode_numbers
    for i in range(3):
        for j in range(3):
            oracle, _ = quad(
                lambda x, qi=q[i], qj=q[j]: 2.0
                * np.sin(qi * np.pi * x)
                * np.sin(qj * np.pi * x),
                0.15,
                0.85,
            )
            assert t[i, j] == pytest.approx(oracle, abs=1e-12)


def test_build_coupling_matrices_bundle():
    basis = build_sine_basis(2, 1024, 1)
    gain = RateProfile("gain", [(0.0, 0.5, 1.0)])
    loss = RateProfile("loss", [(0.5, 1.0, 1.0)])
    mats = build_coupling_matrices(basis, gain, loss)
    assert mats.basis is basis
    assert np.array_equal(mats.gain, mats.gain.T)
    # mirror-image profiles give mirrored off-diagonal signs
    assert mats.gain[0, 1] == pytest.approx(-mats.loss[0, 1], rel=1e-12)
