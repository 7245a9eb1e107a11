from .baselines import DSGD, NetworkLassoADMM, ProxAvg, Walkman, default_admm_rho, walkman_transition
from .core import Algorithm, BlockProx, RandomEdge
from .reference import ReferenceNotTight, ReferenceSolution, reference_solve
from .schedules import (
    Constant,
    SqrtDecay,
    StepSchedule,
    StepSizeError,
    StronglyConvex,
    schedule_alpha,
    schedule_beta,
)

ALGORITHMS = {
    cls.name: cls for cls in (BlockProx, RandomEdge, NetworkLassoADMM, ProxAvg, DSGD, Walkman)
}

__all__ = [
    "ALGORITHMS",
    "Algorithm",
    "BlockProx",
    "Constant",
    "DSGD",
    "NetworkLassoADMM",
    "ProxAvg",
    "RandomEdge",
    "ReferenceNotTight",
    "ReferenceSolution",
    "SqrtDecay",
    "StepSchedule",
    "StepSizeError",
    "StronglyConvex",
    "Walkman",
    "default_admm_rho",
    "reference_solve",
    "schedule_alpha",
    "schedule_beta",
    "walkman_transition",
]
