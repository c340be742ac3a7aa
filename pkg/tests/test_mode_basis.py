import numpy as np
import pytest
from scipy.integrate import quad

from exnoise import SpatialGrid, build_sine_basis, helmholtz_residual, inner_product


def test_lowest_mode_frequency_and_vacuum_amplitude():
    basis = build_sine_basis(1, 1024, 1)
    assert basis.frequencies[0] == pytest.approx(np.pi, rel=1e-15)
    assert basis.vacuum_amplitudes[0] == pytest.approx(np.sqrt(np.pi / 2.0), rel=1e-15)
    x = basis.grid.points
    assert np.allclose(basis.samples[0], np.sqrt(2.0) * np.sin(np.pi * x), atol=1e-13)


def test_two_mode_orthogonality():
    basis = build_sine_basis(2, 1024, 1)
    overlap = inner_product(basis.samples[0], basis.samples[1], basis.grid)
    assert abs(overlap) < 1e-10
    norm = inner_product(basis.samples[0], basis.samples[0], basis.grid)
    assert norm == pytest.approx(1.0, abs=1e-12)


def test_high_mode_frequency_and_helmholtz_residual():
    basis = build_sine_basis(1, 1024, 200)
    assert basis.frequencies[0] == pytest.approx(200 * np.pi, rel=1e-15)
    assert helmholtz_residual(basis, 0) <= 1e-8


def test_interior_node_counts():
    q0 = 3
    basis = build_sine_basis(4, 2048, q0)
    for n in range(4):
        interior = basis.samples[n, 1:-1]
        crossings = int(np.sum(np.abs(np.diff(np.sign(interior))) > 1))
        assert crossings == q0 + n - 1


def test_resolution_error_names_offending_mode():
    with pytest.raises(ValueError, match="universe index 8"):
        build_sine_basis(8, 30, 1)


def test_basic_argument_validation():
    with pytest.raises(ValueError):
        build_sine_basis(0, 1024, 1)
    with pytest.raises(ValueError):
        build_sine_basis(1, 1024, 0)


def test_inner_product_is_bilinear_not_conjugated():
    basis = build_sine_basis(1, 1024, 1)
    u = basis.samples[0]
    value = inner_product(u, 1j * u, basis.grid)
    assert value == pytest.approx(1j, abs=1e-12)


def test_inner_product_shape_mismatch():
    basis = build_sine_basis(1, 1024, 1)
    with pytest.raises(ValueError, match="mismatched"):
        inner_product(basis.samples[0][:-1], basis.samples[0][:-1], basis.grid)


def test_gram_matrix_identity_32_modes():
    basis = build_sine_basis(32, 4096, 1)
    gram = (basis.samples * basis.grid.weights) @ basis.samples.T
    assert np.max(np.abs(gram - np.eye(32))) < 1e-10


def test_helmholtz_residual_small_for_every_mode():
    basis = build_sine_basis(8, 4096, 100)
    for n in range(8):
        assert helmholtz_residual(basis, n) <= 1e-6


def test_helmholtz_residual_perturbed_samples():
    import dataclasses

    basis = build_sine_basis(2, 1024, 1)
    tampered = basis.samples.copy()
    tampered[0] = basis.samples[0] + 0.01 * basis.samples[1]
    perturbed = dataclasses.replace(basis, samples=tampered)
    # residual of u1 + 0.01 u2 against omega_1: 0.01 |w2^2 - w1^2| max|u2|
    w1, w2 = basis.frequencies
    expected = 0.01 * abs(w2**2 - w1**2) * np.max(np.abs(basis.samples[1, 1:-1]))
    assert helmholtz_residual(perturbed, 0) == pytest.approx(expected, rel=1e-9)


def test_helmholtz_residual_index_bounds():
    basis = build_sine_basis(2, 1024, 1)
    with pytest.raises(IndexError):
        helmholtz_residual(basis, 2)


def test_quadrature_convergence_second_order():
    # trapezoid error on a non-grid-aligned integrand halves twice per doubling
    exact, _ = quad(lambda x: np.sqrt(2.0) * np.sin(np.pi * x) * np.exp(x), 0.0, 1.0)
    errors = []
    for n_points in (256, 512, 1024):
        basis = build_sine_basis(1, n_points, 1)
        weight = np.exp(basis.grid.points)
        approx = inner_product(basis.samples[0], weight, basis.grid).real
        errors.append(abs(approx - exact))
    assert errors[0] / errors[1] >= 4.0 * 0.98
    assert errors[1] / errors[2] >= 4.0 * 0.98


def test_grid_invariants():
    grid = SpatialGrid.uniform(512)
    assert abs(grid.weights.sum() - 1.0) <= 1e-12
    assert float(grid.integrate(np.ones(512))) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        SpatialGrid(np.array([0.0, 0.5, 0.5, 1.0]), np.full(4, 0.25))
    with pytest.raises(ValueError):
        SpatialGrid(np.array([0.0, 0.5, 1.0]), np.array([0.5, 0.5, -0.1]))


def test_band_center_is_weighted_mean():
    basis = build_sine_basis(2, 4096, 10)
    w = basis.frequencies
    assert basis.omega_bar == pytest.approx(np.sum(w**2) / np.sum(w), rel=1e-14)
    assert basis.delta_omega == pytest.approx(np.pi, rel=1e-14)


def test_evaluate_matches_samples():
    basis = build_sine_basis(3, 1024, 7)
    values = basis.evaluate(basis.grid.points)
    assert np.allclose(values, basis.samples, atol=1e-10)
