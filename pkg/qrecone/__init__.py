"""Barriers, a path-following solver and a certifier for quantum relative entropy and perspective cones."""

from .barriers import (
    BarrierEval,
    Cone,
    ConePoint,
    EpiDBS,
    EpiQalpha,
    EpiQhat,
    EpiQRE,
    HypoQalpha,
    HypoQhat,
    OpPerspHypo,
    PositiveMap,
    PSDCone,
    TracePerspHypo,
    barrier_eval,
    parse_cone,
)
from .errors import (
    ConcavityError,
    DomainError,
    InfeasiblePointError,
    MeasureError,
    NotHermitianError,
    NumericalFailureError,
    ProblemFormatError,
    QreconeError,
)
from .ipm import ProblemSpec, SolveResult, SolverOptions, newton_center, solve
from .opfun import OpConcaveFn, QuadMeasure, catalog, custom_fn, domain_case, transpose_fn
from .perspective import persp, persp_deriv, persp_quad, trace_divergence, xi, xi_deriv
from .problem import load_problem, parse_problem, problem_to_json

__all__ = [
    "BarrierEval",
    "ConcavityError",
    "Cone",
    "ConePoint",
    "DomainError",
    "EpiDBS",
    "EpiQRE",
    "EpiQalpha",
    "EpiQhat",
    "HypoQalpha",
    "HypoQhat",
    "InfeasiblePointError",
    "MeasureError",
    "NotHermitianError",
    "NumericalFailureError",
    "OpConcaveFn",
    "OpPerspHypo",
    "PSDCone",
    "PositiveMap",
    "ProblemFormatError",
    "ProblemSpec",
    "QreconeError",
    "QuadMeasure",
    "SolveResult",
    "SolverOptions",
    "TracePerspHypo",
    "barrier_eval",
    "catalog",
    "custom_fn",
    "domain_case",
    "load_problem",
    "newton_center",
    "parse_cone",
    "parse_problem",
    "persp",
    "persp_deriv",
    "persp_quad",
    "problem_to_json",
    "solve",
    "trace_divergence",
    "transpose_fn",
    "xi",
    "xi_deriv",
]
