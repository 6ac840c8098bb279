"""Implicit solutions of nonlinear field equations, built and checked numerically.

Fields are defined implicitly by plane-family constraints whose
coefficients are arbitrary user maps.  The package solves the constraints
pointwise (seeded Newton with lattice continuation), differentiates the
implicit field to second order, and evaluates the residual of the target
equation: Bateman, the bordered-Hessian field equation, homogeneous
Monge-Ampere, the wave equation and the first-order transport system.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DomainViolation,
    ExpressionError,
    HomogeneityViolation,
    NonConvergence,
    NullConstraintViolation,
    SingularJacobian,
    UnknownFunction,
    UnknownIdentifier,
)
from .jets import Jet2, jet_chain, jet_const, jet_mul, jet_seed, seed_all
from .expressions import SmoothMap, diff, parse, substitute, to_source
from .families import HomogeneousMap, homogeneity_check, random_family, random_poly
from .solve import (
    AnsatzSystem,
    Axis,
    Lattice,
    SolutionBranch,
    grid_continuation,
    newton_solve,
    restrict_region,
    walk_seed,
)
from .calculus import (
    ScalarFieldSample,
    chaundy_consistency,
    chaundy_jet,
    fd_jet,
    implicit_derivatives,
    implicit_jet,
    separation,
)
from .residuals import (
    ResidualValue,
    VectorFieldSample,
    bateman_residual,
    bordered_hessian,
    euler_defect,
    hessian_equivalence,
    monge_ampere_det,
    monge_system_residual,
    null_gradient,
    wave_residual,
)
from .constructors import (
    bateman_ansatz,
    legendre_pair,
    level_set,
    ma_chaundy,
    monge_flow,
    periodic_trapezoid,
    superposed_wave,
    ufe_chaundy,
    wave_ansatz,
)
from .runner import EQUATIONS, ResidualReport, ScenarioConfig, run_scenario
from .estimators import ImplicitFieldSolver

__all__ = [
    "__version__",
    "ConfigError",
    "DomainViolation",
    "ExpressionError",
    "HomogeneityViolation",
    "NonConvergence",
    "NullConstraintViolation",
    "SingularJacobian",
    "UnknownFunction",
    "UnknownIdentifier",
    "Jet2",
    "jet_chain",
    "jet_const",
    "jet_mul",
    "jet_seed",
    "seed_all",
    "SmoothMap",
    "diff",
    "parse",
    "substitute",
    "to_source",
    "HomogeneousMap",
    "homogeneity_check",
    "random_family",
    "random_poly",
    "AnsatzSystem",
    "Axis",
    "Lattice",
    "SolutionBranch",
    "grid_continuation",
    "newton_solve",
    "restrict_region",
    "walk_seed",
    "ScalarFieldSample",
    "chaundy_consistency",
    "chaundy_jet",
    "fd_jet",
    "implicit_derivatives",
    "implicit_jet",
    "separation",
    "ResidualValue",
    "VectorFieldSample",
    "bateman_residual",
    "bordered_hessian",
    "euler_defect",
    "hessian_equivalence",
    "monge_ampere_det",
    "monge_system_residual",
    "null_gradient",
    "wave_residual",
    "bateman_ansatz",
    "legendre_pair",
    "level_set",
    "ma_chaundy",
    "monge_flow",
    "periodic_trapezoid",
    "superposed_wave",
    "ufe_chaundy",
    "wave_ansatz",
    "EQUATIONS",
    "ResidualReport",
    "ScenarioConfig",
    "run_scenario",
    "ImplicitFieldSolver",
]
