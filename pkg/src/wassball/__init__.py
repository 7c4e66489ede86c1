"""Worst-case expectations over Wasserstein balls around discrete reference measures."""

from .ball import contains, moment_certificate, random_member, tail_mass_bound
from .core import Box, DiscreteMeasure, MetricSpec, ProblemInstance, distance, pth_moment
from .errors import (
    ContractViolation,
    DiagnosticError,
    DomainError,
    InputError,
    ParseError,
    SolverError,
    WassballError,
)
from .expr import ObjectiveFn, evaluate, growth_ratio, parse
from .finiteness import build_divergence_sequence, certify_growth
from .oracle import GridSpec, check_sparsity, solve_grid_lp
from .solver import SolveReport, StructuralCandidate, certify, dual_bound, objective_of, solve, solve_primal
from .transport import TransportPlan, solve_transport, wasserstein

__version__ = "0.1.0"

__all__ = [
    "Box", "ContractViolation", "DiagnosticError", "DiscreteMeasure", "DomainError", "GridSpec",
    "InputError", "MetricSpec", "ObjectiveFn", "ParseError", "ProblemInstance", "SolveReport",
    "SolverError", "StructuralCandidate", "TransportPlan", "WassballError", "build_divergence_sequence",
    "certify", "certify_growth", "check_sparsity", "contains", "distance", "dual_bound", "evaluate",
    "growth_ratio", "moment_certificate", "objective_of", "parse", "pth_moment", "random_member",
    "solve", "solve_grid_lp", "solve_primal", "solve_transport", "tail_mass_bound", "wasserstein",
]
