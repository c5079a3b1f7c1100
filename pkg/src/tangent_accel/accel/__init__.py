"""Accelerated first- and second-order methods on manifolds."""
from .drivers import (
    GRAD_STEP,
    PERTURBED_TSS,
    TSS,
    RunTrace,
    TraceRecord,
    backtracking_tagd,
    ptagd,
    rgd,
    tagd,
)
from .params import (
    AlgoParams,
    ball_radius,
    check_param_relations,
    derive_params,
    params_from_pullback_constants,
)
from .tss import (
    ExitCase,
    InvariantMonitor,
    TSSOutcome,
    capped_theta,
    ncc_triggers,
    nce,
    tss,
)

__all__ = [
    "AlgoParams", "ExitCase", "GRAD_STEP", "InvariantMonitor", "PERTURBED_TSS", "RunTrace",
    "TSS", "TSSOutcome", "TraceRecord", "backtracking_tagd", "ball_radius", "capped_theta",
    "check_param_relations", "derive_params", "ncc_triggers", "nce",
    "params_from_pullback_constants", "ptagd", "rgd", "tagd", "tss",
]
