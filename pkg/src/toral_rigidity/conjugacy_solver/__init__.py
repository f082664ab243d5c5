from .fits import (PowerLawFit, conjugacy_samples_from_action, exponent_relation_defect,
                   fit_complex_form, fit_power_law_real)
from .franks_manning import (ConjugacyResult, EquivarianceReport, SolverConfig, conjugacy_residual,
                             hyperbolic_splitting, inverse_residual, solve_franks_manning,
                             verify_equivariance)
from .germ import GermConfig, GermMap, LinearizationChart, Obstruction, linearize_germ
from .grid import GridDisplacement, grid_points, torus_difference, torus_distance
from .holder import HolderEstimate, estimate_holder
from .maps import (ConjugatedDisplacement, PerturbedMap, TrigPolynomial, TrigTerm,
                   format_perturbation_text, parse_perturbation_text)
from .splitting import SplittingReport, check_splitting

__all__ = [
    "ConjugacyResult", "ConjugatedDisplacement", "EquivarianceReport", "GermConfig", "GermMap",
    "GridDisplacement", "HolderEstimate", "LinearizationChart", "Obstruction", "PerturbedMap",
    "PowerLawFit", "SolverConfig", "SplittingReport", "TrigPolynomial", "TrigTerm",
    "check_splitting", "conjugacy_residual", "conjugacy_samples_from_action", "estimate_holder",
    "exponent_relation_defect", "fit_complex_form", "fit_power_law_real", "format_perturbation_text",
    "grid_points", "hyperbolic_splitting", "inverse_residual", "linearize_germ",
    "parse_perturbation_text", "solve_franks_manning", "torus_difference", "torus_distance",
    "verify_equivariance",
]
