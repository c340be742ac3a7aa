"""Quasi modes and excess noise of reservoir-coupled optical fields.

Pipelines: sine-mode basis and quadrature (mode_basis), spatial gain/loss
reservoirs and coupling matrices (reservoir_coupling), the non-Hermitian
eigenproblem with biorthogonal quasi modes and Petermann K-factors
(quasimodes), exact moment evolution (moment_dynamics), Monte-Carlo Langevin
ensembles and field-level noise (langevin_field), transverse beam propagation
(paraxial), and a scenario CLI (cli).
"""

__version__ = "0.1.0"

from .mode_basis import (
    ModeBasis,
    SpatialGrid,
    build_sine_basis,
    helmholtz_residual,
    inner_product,
)
from .reservoir_coupling import (
    CouplingMatrices,
    RateProfile,
    Segment,
    build_coupling_matrices,
    coupling_matrix,
    position_rate,
    segment_overlap_matrix,
)
from .quasimodes import (
    DegenerateModeError,
    DriftMatrix,
    QuasiModeSet,
    build_drift_matrix,
    decompose_rates,
    petermann_k_coeff,
    petermann_k_integral,
    project_to_quasimodes,
    quasi_mode_functions,
    reconstruct_amplitudes,
    solve_mode_operator,
    solve_quasimodes,
)
from .moment_dynamics import (
    MomentState,
    ORDERINGS,
    default_timestep,
    diffusion_matrix,
    evolve_correlations,
    evolve_means,
    quadrature_variance,
    quasi_correlations,
)
from .langevin_field import (
    AccumulatedNoise,
    EnsembleMoments,
    FieldState,
    TrajectoryEnsemble,
    accumulated_noise_variance,
    ensemble_moments,
    field_variance,
    hertzian_kernel,
    propagate_green,
    simulate_ensemble,
)
from .paraxial import (
    TransverseField,
    beam_width,
    gaussian_beam,
    paraxial_step,
    propagate_paraxial,
    transverse_coordinates,
    transverse_quasimodes,
)

__all__ = [
    "__version__",
    "ModeBasis",
    "SpatialGrid",
    "build_sine_basis",
    "helmholtz_residual",
    "inner_product",
    "CouplingMatrices",
    "RateProfile",
    "Segment",
    "build_coupling_matrices",
    "coupling_matrix",
    "position_rate",
    "segment_overlap_matrix",
    "DegenerateModeError",
    "DriftMatrix",
    "QuasiModeSet",
    "build_drift_matrix",
    "decompose_rates",
    "petermann_k_coeff",
    "petermann_k_integral",
    "project_to_quasimodes",
    "quasi_mode_functions",
    "reconstruct_amplitudes",
    "solve_mode_operator",
    "solve_quasimodes",
    "MomentState",
    "ORDERINGS",
    "default_timestep",
    "diffusion_matrix",
    "evolve_correlations",
    "evolve_means",
    "quadrature_variance",
    "quasi_correlations",
    "AccumulatedNoise",
    "EnsembleMoments",
    "FieldState",
    "TrajectoryEnsemble",
    "accumulated_noise_variance",
    "ensemble_moments",
    "field_variance",
    "hertzian_kernel",
    "propagate_green",
    "simulate_ensemble",
    "TransverseField",
    "beam_width",
    "gaussian_beam",
    "paraxial_step",
    "propagate_paraxial",
    "transverse_coordinates",
    "transverse_quasimodes",
]
