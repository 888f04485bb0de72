"""Dense real-matrix helpers shared by every other module.

Matrices are plain 2-D ``float64`` numpy arrays. The helpers here validate
shape and finiteness and wrap the few kernels the solver needs.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import NamedTuple

import numpy as np
import scipy.linalg

from .errors import DimensionError, DivisionDomainError, NumericalFailure

#: Absolute tolerance below which an entry counts as zero.
ZERO_TOL = 1e-8

NORM_KINDS = (
    "frobenius",
    "nuclear",
    "spectral",
    "entrywise_l1",
    "entrywise_l0",
    "entrywise_linf",
)


class SvdFactors(NamedTuple):
    """Thin SVD ``A = U @ diag(s) @ V.T`` with ``s`` sorted descending."""

    U: np.ndarray
    s: np.ndarray
    V: np.ndarray

    def compose(self, s: np.ndarray | None = None) -> np.ndarray:
        """Rebuild ``U diag(s) V^T``, optionally with replacement values."""
        s = self.s if s is None else s
        return (self.U * s) @ self.V.T


def as_matrix(A, name: str = "A") -> np.ndarray:
    """Return ``A`` as a finite 2-D float64 array, or raise."""
    A = np.asarray(A, dtype=np.float64)
    if A.ndim == 1:
        A = A.reshape(1, -1)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise DimensionError(f"{name} must be a non-empty 2-D matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} contains non-finite entries")
    return A


def _check_same_shape(A: np.ndarray, B: np.ndarray) -> None:
    if A.shape != B.shape:
        raise DimensionError(f"shape mismatch: {A.shape} vs {B.shape}")


def svd(A) -> SvdFactors:
    """Thin SVD of ``A``.

    LAPACK's divide-and-conquer driver is tried first; if it fails to
    converge the QR-iteration driver is used. If both fail a
    :class:`NumericalFailure` is raised.
    """
    A = as_matrix(A)
    try:
        U, s, Vt = np.linalg.svd(A, full_matrices=False)
    except np.linalg.LinAlgError:
        try:
            U, s, Vt = scipy.linalg.svd(A, full_matrices=False, lapack_driver="gesvd")
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure(f"SVD did not converge for {A.shape} matrix") from exc
    return SvdFactors(U, s, Vt.T)


def singular_values(A) -> np.ndarray:
    A = as_matrix(A)
    try:
        return np.linalg.svd(A, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"SVD did not converge for {A.shape} matrix") from exc


def norm(A, kind: str = "frobenius", zero_tol: float = ZERO_TOL) -> float:
    """Matrix norm of the given ``kind``.

    ``entrywise_l0`` counts entries with magnitude above ``zero_tol``.
    """
    A = as_matrix(A)
    if kind == "frobenius":
        return float(np.sqrt(np.sum(A * A)))
    if kind == "nuclear":
        return float(np.sum(singular_values(A)))
    if kind == "spectral":
        return float(singular_values(A)[0])
    if kind == "entrywise_l1":
        return float(np.sum(np.abs(A)))
    if kind == "entrywise_l0":
        return int(np.count_nonzero(np.abs(A) > zero_tol))
    if kind == "entrywise_linf":
        return float(np.max(np.abs(A)))
    raise ValueError(f"unknown norm kind {kind!r}; expected one of {NORM_KINDS}")


def hadamard(A, B) -> np.ndarray:
    A, B = as_matrix(A), as_matrix(B, "B")
    _check_same_shape(A, B)
    return A * B


def elementwise_div(A, B) -> np.ndarray:
    A, B = as_matrix(A), as_matrix(B, "B")
    _check_same_shape(A, B)
    zeros = np.argwhere(B == 0)
    if zeros.size:
        k, l = zeros[0]
        raise DivisionDomainError(f"zero divisor at index ({k}, {l})")
    return A / B


def clip(A, zeta: float) -> np.ndarray:
    """Project ``A`` entrywise onto the box ``[-zeta, zeta]``."""
    if not zeta > 0:
        raise ValueError("zeta must be positive")
    return np.clip(as_matrix(A), -zeta, zeta)


def read_csv(path, shape: tuple[int, int] | None = None) -> np.ndarray:
    """Read a headerless numeric CSV matrix; ragged rows are rejected.

    When ``shape`` is given the file must match it exactly.
    """
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise DimensionError(f"{path}: empty matrix file")
    width = len(rows[0])
    for i, r in enumerate(rows):
        if len(r) != width:
            raise DimensionError(f"{path}: row {i} has {len(r)} fields, expected {width}")
    A = as_matrix([[float(v) for v in r] for r in rows], str(path))
    if shape is not None and A.shape != tuple(shape):
        raise DimensionError(f"{path}: shape {A.shape} does not match expected {tuple(shape)}")
    return A


def write_csv(path, A) -> Path:
    A = as_matrix(A)
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in A:
            writer.writerow([repr(float(v)) for v in row])
    return path
