"""Almost-sure stability certificates for switched linear systems with bounded mode-activation ratios."""

from ._backend import NAME as BACKEND
from .certify import (
    AttackPlan,
    StabilityCertificate,
    Verdict,
    build_lp1,
    build_lp2,
    certify,
    equivalence_suite,
    extract_attack,
    feasible_point_lemma2,
    monodromy_check,
    optimal_J,
    recover_lp1_solution,
)
from .lifting import (
    GammaTables,
    build_gamma_tables,
    count_vector,
    enumerate_compositions,
    gamma_of,
    lifted_product,
    variable_counts,
)
from .lpcore import LpModel, LpSolution, LpStatus, solve, verify_certificate
from .matlib import InvalidInput, NormKind, mat_mul, mat_norm, spectral_radius
from .model import ActivationBounds, SwitchedSystem

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "ActivationBounds", "AttackPlan", "GammaTables", "InvalidInput", "LpModel", "LpSolution",
    "LpStatus", "NormKind", "StabilityCertificate", "SwitchedSystem", "Verdict", "build_gamma_tables",
    "build_lp1", "build_lp2", "certify", "count_vector", "enumerate_compositions", "equivalence_suite",
    "extract_attack", "feasible_point_lemma2", "gamma_of", "lifted_product", "mat_mul", "mat_norm",
    "monodromy_check", "optimal_J", "recover_lp1_solution", "solve", "spectral_radius",
    "variable_counts", "verify_certificate",
]
