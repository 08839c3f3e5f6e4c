"""Exact augmented Lagrangian for equality and inequality constrained problems.

The penalty function is minimised jointly in the primal variable and both
multipliers; for large enough finite penalty its minimisers are KKT points.
"""

from .alf import (
    AlfConfig,
    AlfEvaluation,
    AlfGradient,
    alf_gradient,
    alf_value,
    alf_value_alt_form,
    evaluate,
    lower_bound_lemma1,
)
from .problem import KnownSolution, PrimalDual, ProblemSpec
from .registry import problem_names, registry_lookup
from .regularity import a_max, kkt_residual, multiplier_estimate, regularity_report, sosc_check
from .shaping import make_phi, make_psi
from .solver import SolverConfig, SolveReport, exactness_sweep, minimize_fixed_c, solve_adaptive

__version__ = "0.1.0"

__all__ = [
    "AlfConfig",
    "AlfEvaluation",
    "AlfGradient",
    "KnownSolution",
    "PrimalDual",
    "ProblemSpec",
    "SolveReport",
    "SolverConfig",
    "a_max",
    "alf_gradient",
    "alf_value",
    "alf_value_alt_form",
    "evaluate",
    "exactness_sweep",
    "kkt_residual",
    "lower_bound_lemma1",
    "make_phi",
    "make_psi",
    "minimize_fixed_c",
    "multiplier_estimate",
    "problem_names",
    "registry_lookup",
    "regularity_report",
    "solve_adaptive",
    "sosc_check",
]
