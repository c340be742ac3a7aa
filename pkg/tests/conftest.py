"""Shared scenario builders for the test suite."""

import numpy as np
import pytest

from exnoise import (
    RateProfile,
    build_coupling_matrices,
    build_drift_matrix,
    build_sine_basis,
    solve_quasimodes,
)


def split_gain_loss_scenario(q0=200, rho=0.04, n_modes=2, grid_points=4096):
    """Gain on [0, 1/2], loss on [1/2, 1], equal densities."""
    basis = build_sine_basis(n_modes, grid_points, q0)
    gain = RateProfile("gain", [(0.0, 0.5, rho)])
    loss = RateProfile("loss", [(0.5, 1.0, rho)])
    mats = build_coupling_matrices(basis, gain, loss)
    qset = solve_quasimodes(build_drift_matrix(basis, mats.gain, mats.loss))
    return basis, gain, loss, mats, qset


def near_ep_density(q0):
    """Density putting the two-mode split scenario at coupling sqrt(2) times
    the exceptional-point value, where the excess-noise factor is exactly 2."""
    basis = build_sine_basis(2, 4096, q0)
    eps = basis.vacuum_amplitudes
    overlap = (1.0 / np.pi) * (1.0 - 1.0 / (2 * q0 + 1))
    delta = 0.5 * (basis.frequencies[1] - basis.frequencies[0])
    return float(delta * np.sqrt(2.0) / (eps[0] * eps[1] * overlap))


@pytest.fixture(scope="session")
def standard_scenario():
    return split_gain_loss_scenario()


@pytest.fixture(scope="session")
def near_ep_scenario():
    rho = near_ep_density(200)
    return split_gain_loss_scenario(rho=rho)
