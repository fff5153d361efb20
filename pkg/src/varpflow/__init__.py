"""Finite-difference solver and estimate checks for the parabolic p(x,t)-Laplacian."""

__version__ = "0.1.0"

from .errors import (ConfigError, DimensionError, InsufficientDataError, ParameterError, SolverError,
                     VarpflowError)
from .exponents import ExponentField, StructuralParams, mollify, r_admissible_range, validate_structure
from .flux_algebra import FluxSample, flux, linearization, source
from .grid import Grid, GridFunction
from .solver import ProblemData, SolveResult, SolverConfig, continuation_sweep, homotopy_solve, solve
from .spaces import holder_check, luxemburg_norm, modular, solution_norms

__all__ = [
    "ConfigError", "DimensionError", "InsufficientDataError", "ParameterError", "SolverError",
    "VarpflowError", "ExponentField", "StructuralParams", "mollify", "r_admissible_range",
    "validate_structure", "FluxSample", "flux", "linearization", "source", "Grid", "GridFunction",
    "ProblemData", "SolveResult", "SolverConfig", "continuation_sweep", "homotopy_solve", "solve",
    "holder_check", "luxemburg_norm", "modular", "solution_norms",
]
