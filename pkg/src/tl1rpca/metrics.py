"""Evaluation of recovered decompositions."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .admm import ObservationSet
from .dense import ZERO_TOL, as_matrix, singular_values
from .errors import DegenerateReferenceError, DimensionError

#: Relative singular-value cutoff for numerical rank.
RANK_TOL = 1e-8


@dataclass
class EvalReport:
    re_L: float
    dice_S: float
    rank_L: int
    card_S: int
    recon_err: float
    runtime_seconds: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


def relative_error(A_hat, A0) -> float:
    A_hat, A0 = as_matrix(A_hat, "A_hat"), as_matrix(A0, "A0")
    if A_hat.shape != A0.shape:
        raise DimensionError(f"shape mismatch: {A_hat.shape} vs {A0.shape}")
    ref = np.linalg.norm(A0)
    if ref == 0:
        raise DegenerateReferenceError("reference matrix is identically zero")
    return float(np.linalg.norm(A_hat - A0) / ref)


def support(A, zero_tol: float = ZERO_TOL) -> np.ndarray:
    return np.abs(as_matrix(A)) > zero_tol


def dice(S_hat, S0, zero_tol: float = ZERO_TOL) -> float:
    """Dice overlap of the two supports. Two empty supports score 1."""
    a, b = support(S_hat, zero_tol), support(S0, zero_tol)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch: {a.shape} vs {b.shape}")
    total = int(a.sum()) + int(b.sum())
    if total == 0:
        return 1.0
    return 2.0 * int(np.sum(a & b)) / total


def numerical_rank(A, tol_rel: float = RANK_TOL) -> int:
    """Number of singular values above ``tol_rel * sigma_max``."""
    if not tol_rel > 0:
        raise ValueError("tol_rel must be positive")
    s = singular_values(A)
    if s[0] == 0:
        return 0
    return int(np.count_nonzero(s > tol_rel * s[0]))


def cardinality(S, zero_tol: float = ZERO_TOL) -> int:
    if zero_tol < 0:
        raise ValueError("zero_tol must be nonnegative")
    return int(np.count_nonzero(support(S, zero_tol)))


def reconstruction_error(obs: ObservationSet, L_hat, S_hat) -> float:
    """``||Y - T*(L + S)||_F / ||Y||_F`` over the observed entries."""
    ref = np.linalg.norm(obs.values)
    if ref == 0:
        raise DegenerateReferenceError("observed signal is identically zero")
    resid = obs.values - obs.mask * (as_matrix(L_hat) + as_matrix(S_hat))
    return float(np.linalg.norm(resid) / ref)


def evaluate(L_hat, S_hat, obs: ObservationSet, L0=None, S0=None,
             runtime_seconds: float = 0.0, zero_tol: float = ZERO_TOL,
             rank_tol: float = RANK_TOL) -> EvalReport:
    """Full report; ground-truth metrics are NaN when ``L0``/``S0`` are absent."""
    return EvalReport(
        re_L=relative_error(L_hat, L0) if L0 is not None else float("nan"),
        dice_S=dice(S_hat, S0, zero_tol) if S0 is not None else float("nan"),
        rank_L=numerical_rank(L_hat, rank_tol),
        card_S=cardinality(S_hat, zero_tol),
        recon_err=reconstruction_error(obs, L_hat, S_hat),
        runtime_seconds=float(runtime_seconds),
    )
