"""Robust PCA with transformed-l1 (TL1) penalties, solved by ADMM.

An observed, partially sampled and noisy matrix is split into a low-rank
part ``L`` and a sparse part ``S``. TL1 penalties on the singular values of
``L`` and the entries of ``S`` replace the nuclear and l1 norms of the
classical convex model, which is kept as a baseline.
"""

from .admm import DecompositionResult, ObservationSet, SolverConfig, objective, solve, solve_l1
from .errors import (
    ConfigurationError,
    DegenerateReferenceError,
    DimensionError,
    DivergenceError,
    DivisionDomainError,
    InfeasibleGridError,
    NumericalFailure,
    RPCAError,
)
from .metrics import EvalReport, evaluate
from .regularizers import phi_entrywise, phi_singular, prox_tl1, prox_tl1_singular, soft_threshold, svt

__all__ = [
    "ConfigurationError",
    "DecompositionResult",
    "DegenerateReferenceError",
    "DimensionError",
    "DivergenceError",
    "DivisionDomainError",
    "EvalReport",
    "InfeasibleGridError",
    "NumericalFailure",
    "ObservationSet",
    "RPCAError",
    "SolverConfig",
    "evaluate",
    "objective",
    "phi_entrywise",
    "phi_singular",
    "prox_tl1",
    "prox_tl1_singular",
    "soft_threshold",
    "solve",
    "solve_l1",
    "svt",
]
