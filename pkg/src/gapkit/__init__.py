"""Fundamental spectral gap of ``-(p u')' + V u`` on [0, pi]: solvers, step spectra, optimisers."""

from .asymptotics import (
    ReducedSolution,
    ThetaConstant,
    minimize_gap_proxy,
    minimize_reduced_all_branches,
    reduced_gap_all_branches,
    solve_reduced,
    solve_theta,
    x_minus_expansion,
)
from .optimize import (
    MinimizerReport,
    minimize_convex_pl,
    minimize_single_well_grid,
    minimize_step_family,
    truncation_experiment,
    verify_first_order,
)
from .potential import (
    DIRICHLET,
    BoundaryConditions,
    CoefficientP,
    Potential,
    Side,
    StepPotential,
    blend,
    classify,
    evaluate,
    proof_perturbation,
    reflect,
)
from .solver import (
    EigenSolution,
    GapResult,
    Wronskian,
    crossing_points,
    dense_oracle,
    feynman_hellmann,
    gap,
    gap_derivative,
    shoot_eigenvalues,
    wronskian_diagnostic,
)
from .step import (
    Branch,
    RescaledState,
    StepEigenvalue,
    matching_residual,
    rescale,
    step_eigenvalues,
    unscale,
)

__version__ = "0.1.0"
