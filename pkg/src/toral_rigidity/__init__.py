"""Exact and numerical tools for rigidity of toral automorphism actions."""
from .centralizer import (GeneratorSet, UnitSearchConfig, dirichlet_rank, find_units,
                          multiplicative_independence, symplectic_centralizer_front_end)
from .exact_linear_algebra import ToralMatrix, count_periodic_points, periodic_points, smith_normal_form
from .hypothesis_checker import HypothesisReport, run_checks, theorem_1_1_check, theorem_2_2_check
from .lyapunov_geometry import coarse_spaces, exponent_functionals, weyl_chambers
from .pipeline import RunConfig

__version__ = "0.1.0"

__all__ = [
    "GeneratorSet", "HypothesisReport", "RunConfig", "ToralMatrix", "UnitSearchConfig", "coarse_spaces",
    "count_periodic_points", "dirichlet_rank", "exponent_functionals", "find_units",
    "multiplicative_independence", "periodic_points", "run_checks", "smith_normal_form",
    "symplectic_centralizer_front_end", "theorem_1_1_check", "theorem_2_2_check", "weyl_chambers",
]
