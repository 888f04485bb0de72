"""Brute-force checks of the TL1 proximal operator.

These back the ``prox-check`` command and the test suite: the closed-form
prox is compared with a dense 1-D grid search over the same objective.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .regularizers import prox_objective, prox_tl1


def brute_prox(x: float, a: float, mu: float, step: float = 1e-4, fine: float = 1e-6) -> float:
    """Minimize ``mu * rho_a(z) + (z - x)**2 / 2`` by grid search.

    The minimizer lies between 0 and ``x``, so only that interval is
    scanned: first with ``step``, then with ``fine`` around the best coarse
    point. 0 and ``x`` are always included.
    """
    ax = abs(x)
    z = np.append(np.arange(0.0, ax, step), ax)
    f = prox_objective(z, ax, a, mu)
    z0 = z[np.argmin(f)]
    zf = np.clip(np.arange(z0 - step, z0 + step + fine, fine), 0.0, ax)
    zf = np.concatenate([zf, [0.0, ax]])
    ff = prox_objective(zf, ax, a, mu)
    return float(np.copysign(zf[np.argmin(ff)], x))


@dataclass
class ProxCheck:
    n: int
    worst_gap: float
    worst_case: tuple[float, float, float]
    tol: float

    @property
    def passed(self) -> bool:
        return self.worst_gap <= self.tol


def random_triples(n: int, seed: int = 0) -> np.ndarray:
    """``(x, a, mu)`` rows: x ~ U[-5, 5], a and mu log-uniform."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(-5.0, 5.0, n)
    a = 10.0 ** rng.uniform(-2.0, 2.0, n)
    mu = 10.0 ** rng.uniform(-3.0, 1.0, n)
    return np.column_stack([x, a, mu])


def prox_check(n: int = 1000, seed: int = 0, tol: float = 1e-6) -> ProxCheck:
    """Largest amount by which the closed-form prox's objective exceeds the
    brute-force one over ``n`` random triples."""
    worst, case = -np.inf, (np.nan, np.nan, np.nan)
    for x, a, mu in random_triples(n, seed):
        z = prox_tl1(x, a, mu)
        zb = brute_prox(x, a, mu)
        gap = float(prox_objective(z, x, a, mu) - prox_objective(zb, x, a, mu))
        if gap > worst:
            worst, case = gap, (float(x), float(a), float(mu))
    return ProxCheck(n=n, worst_gap=worst, worst_case=case, tol=tol)
