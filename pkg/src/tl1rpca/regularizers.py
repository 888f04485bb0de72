"""Transformed-l1 (TL1) penalties and their proximal operators.

The scalar TL1 penalty is ``rho_a(x) = (a + 1)|x| / (a + |x|)``. It tends to
the indicator ``1{x != 0}`` as ``a -> 0+`` and to ``|x|`` as ``a -> inf``.
Applied to matrix entries it interpolates between l0 and l1. Applied to
singular values it interpolates between rank and nuclear norm.
"""

from __future__ import annotations

import numpy as np

from .dense import as_matrix, singular_values, svd


def check_a(a: float) -> float:
    a = float(a)
    if not a > 0 or not np.isfinite(a):
        raise ValueError(f"TL1 parameter a must be a positive finite number, got {a}")
    return a


def _check_mu(mu: float) -> float:
    mu = float(mu)
    if mu < 0 or not np.isfinite(mu):
        raise ValueError(f"prox weight mu must be nonnegative, got {mu}")
    return mu


def tl1_scalar(x, a: float):
    """Elementwise TL1 penalty; works on scalars and arrays."""
    a = check_a(a)
    ax = np.abs(x)
    return (a + 1.0) * ax / (a + ax)


def phi_entrywise(A, a: float) -> float:
    """Sum of the TL1 penalty over all entries of ``A``."""
    return float(np.sum(tl1_scalar(as_matrix(A), a)))


def phi_singular(A, a: float) -> float:
    """Sum of the TL1 penalty over the singular values of ``A``."""
    return float(np.sum(tl1_scalar(singular_values(A), a)))


def prox_objective(z, x, a: float, mu: float):
    """``mu * rho_a(z) + (z - x)**2 / 2``, the function the TL1 prox minimizes."""
    return mu * tl1_scalar(z, a) + 0.5 * (np.asarray(z) - np.asarray(x)) ** 2


def _prox_tl1_abs(ax: np.ndarray, a: float, mu: float) -> np.ndarray:
    # Closed-form stationary point of the cubic, written as
    #   z = |x| - (4/3)(a + |x|) sin^2(phi/6),  phi = 2 arcsin(sqrt(h))
    # with h = (1 - cos phi)/2 = 27 mu a (1 + a) / (4 (a + |x|)^3). This is
    # algebraically the textbook trigonometric root but avoids the
    # cancellation in 1 - cos(...) when a is large.
    s = a + ax
    h = 27.0 * mu * a * (1.0 + a) / (4.0 * s**3)
    feasible = h <= 1.0
    phi = 2.0 * np.arcsin(np.sqrt(np.minimum(h, 1.0)))
    zc = ax - (4.0 / 3.0) * s * np.sin(phi / 6.0) ** 2
    zc = np.clip(zc, 0.0, ax)
    # The root is only a candidate: below the threshold the origin wins.
    keep = feasible & (prox_objective(zc, ax, a, mu) < 0.5 * ax * ax)
    return np.where(keep, zc, 0.0)


def prox_tl1(x, a: float, mu: float):
    """Proximal operator of ``mu * rho_a`` evaluated at ``x``.

    Returns a global minimizer of ``mu*(a+1)|z|/(a+|z|) + (z-x)^2/2``.
    Accepts scalars or arrays (applied elementwise); ``mu == 0`` returns
    ``x`` unchanged.
    """
    a, mu = check_a(a), _check_mu(mu)
    scalar = np.ndim(x) == 0
    x = np.asarray(x, dtype=np.float64)
    if mu == 0.0:
        out = x.copy()
    else:
        out = np.sign(x) * _prox_tl1_abs(np.abs(x), a, mu)
    return float(out) if scalar else out


def prox_tl1_matrix(A, a: float, mu: float) -> np.ndarray:
    return prox_tl1(as_matrix(A), a, mu)


def prox_tl1_singular(A, a: float, mu: float) -> np.ndarray:
    """Apply the TL1 prox to the singular values of ``A``."""
    A = as_matrix(A)
    if _check_mu(mu) == 0.0:
        return A.copy()
    f = svd(A)
    s_new = prox_tl1(f.s, a, mu)
    # monotone in x, so the ordering survives
    assert np.all(np.diff(s_new) <= 1e-12 * max(1.0, s_new[0]))
    return f.compose(s_new)


def soft_threshold(x, mu: float):
    """``sign(x) * max(|x| - mu, 0)``; scalars or arrays."""
    mu = _check_mu(mu)
    scalar = np.ndim(x) == 0
    x = np.asarray(x, dtype=np.float64)
    out = np.sign(x) * np.maximum(np.abs(x) - mu, 0.0)
    return float(out) if scalar else out


def svt(A, mu: float) -> np.ndarray:
    """Singular value soft-thresholding, the prox of ``mu * ||.||_*``."""
    A = as_matrix(A)
    f = svd(A)
    return f.compose(soft_threshold(f.s, mu))
