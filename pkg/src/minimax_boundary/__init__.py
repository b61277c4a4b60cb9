"""Minimax linear estimation of f(0) at the boundary of [0, inf) in white noise.

Least favorable functions and constants live in :mod:`.least_favorable`,
kernels and risks in :mod:`.kernel_risk`, brute-force checks in
:mod:`.oracle` and Monte Carlo experiments in :mod:`.simulator`.
"""

from .exceptions import (BracketError, ConfigurationError, ConvergenceError, CoverageError,
                         DomainError, MinimaxBoundaryError)
from .kernel_risk import (KernelSpec, ModulusPoint, NoiseModel, RiskReport, analytic_risk,
                          apply_estimator, boundary_kernel, minimax_risk, modulus,
                          optimal_delta, probe_family, rd_analytic_risk, rd_kernel,
                          rd_minimax_risk, rd_modulus)
from .least_favorable import (BoundarySolution, InteriorSolution, SmoothnessParams,
                              boundary_family, optimal_solution, scale_solution,
                              solve_constants)
from .piecewise import PiecewiseQuadratic, inner_product, norm_sq
from .simulator import (PathConfig, RDScenario, SimulationReport, build_rd_scenario,
                        monte_carlo_risk, rd_monte_carlo, sample_increments)

__version__ = "0.1.0"

__all__ = [
    "BoundarySolution", "BracketError", "ConfigurationError", "ConvergenceError",
    "CoverageError", "DomainError", "InteriorSolution", "KernelSpec", "MinimaxBoundaryError",
    "ModulusPoint", "NoiseModel", "PathConfig", "PiecewiseQuadratic", "RDScenario",
    "RiskReport", "SimulationReport", "SmoothnessParams", "analytic_risk", "apply_estimator",
    "boundary_family", "boundary_kernel", "build_rd_scenario", "inner_product",
    "minimax_risk", "modulus", "monte_carlo_risk", "norm_sq", "optimal_delta",
    "optimal_solution", "probe_family", "rd_analytic_risk", "rd_kernel", "rd_minimax_risk",
    "rd_modulus", "rd_monte_carlo", "sample_increments", "scale_solution", "solve_constants",
]
