"""Accelerated optimization on Riemannian manifolds through tangent-space pullbacks."""
from .accel import (
    AlgoParams,
    ExitCase,
    InvariantMonitor,
    RunTrace,
    backtracking_tagd,
    check_param_relations,
    derive_params,
    nce,
    ptagd,
    rgd,
    tagd,
    tss,
)
from .exceptions import (
    AssumptionViolation,
    BudgetExceeded,
    ConfigError,
    GiveUp,
    InvariantBreach,
    ManifoldError,
    TangentAccelError,
)
from .geometry import CurvatureProfile, Manifold
from .manifolds import SPD, Euclidean, Hyperbolic, Sphere
from .problems import PROBLEMS, build_problem, estimate_lipschitz, initial_point
from .pullback import (
    ProblemDef,
    QueryCounters,
    hess_vec_at_origin,
    lambda_min_origin,
    pullback_grad,
    pullback_value,
)

__version__ = "0.1.0"

__all__ = [
    "AlgoParams", "AssumptionViolation", "BudgetExceeded", "ConfigError", "CurvatureProfile",
    "Euclidean", "ExitCase", "GiveUp", "Hyperbolic", "InvariantBreach", "InvariantMonitor",
    "Manifold", "ManifoldError", "PROBLEMS", "ProblemDef", "QueryCounters", "RunTrace", "SPD",
    "Sphere", "TangentAccelError", "backtracking_tagd", "build_problem", "check_param_relations",
    "derive_params", "estimate_lipschitz", "hess_vec_at_origin", "initial_point",
    "lambda_min_origin", "nce", "ptagd", "pullback_grad", "pullback_value", "rgd", "tagd", "tss",
]
