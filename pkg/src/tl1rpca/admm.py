"""Five-block ADMM for TL1-regularized robust PCA, plus the convex L1 baseline.

The model is

    min_{|L|,|S| <= zeta}  (1/N) sum_i (Y_i - <T_i, L + S>)^2
                           + lam1 * Phi_{a1}(L) + lam2 * phi_{a2}(S)

split with auxiliary copies ``J = L`` and ``R = S`` that carry the data
term and the box constraint. ``B`` and ``D`` are the scaled duals. The L1
baseline swaps the two TL1 proxes for singular-value and entrywise soft
thresholding, and otherwise runs the same iteration.
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field

import numpy as np

from .dense import as_matrix, clip, singular_values
from .errors import ConfigurationError, DimensionError, DivergenceError, NumericalFailure
from .regularizers import (
    check_a,
    phi_entrywise,
    phi_singular,
    prox_tl1_matrix,
    prox_tl1_singular,
    soft_threshold,
    svt,
)

logger = logging.getLogger(__name__)

REGULARIZERS = ("TL1", "L1")


@dataclass(frozen=True)
class ObservationSet:
    """Sampling mask ``T`` and observed values ``Y`` (zero off the mask)."""

    mask: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        mask = as_matrix(self.mask, "mask")
        values = as_matrix(self.values, "values")
        if mask.shape != values.shape:
            raise DimensionError(f"mask {mask.shape} and values {values.shape} differ in shape")
        if not np.all((mask == 0) | (mask == 1)):
            raise ConfigurationError("mask entries must be exactly 0 or 1")
        if np.any(values[mask == 0] != 0):
            raise ConfigurationError("values must be zero wherever the mask is zero")
        if not mask.any():
            raise ConfigurationError("observation set is empty (N = 0)")
        mask.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_matrix(cls, Y, mask=None) -> "ObservationSet":
        """Observe ``Y`` on ``mask`` (everything when ``mask`` is None)."""
        Y = as_matrix(Y, "Y")
        mask = np.ones_like(Y) if mask is None else as_matrix(mask, "mask")
        return cls(mask, np.where(mask == 1, Y, 0.0))

    @property
    def shape(self) -> tuple[int, int]:
        return self.mask.shape

    @property
    def n_obs(self) -> int:
        return int(self.mask.sum())


@dataclass(frozen=True)
class SolverConfig:
    """Hyperparameters of the model and of the ADMM iteration.

    ``rho_decay`` rescales both penalties every iteration as
    ``rho <- rho / rho_decay``; 1 keeps them constant, values below 1 grow
    them (the default 0.9 is needed for the tiny initial penalties to reach
    a useful size), values above 1 shrink them. The iteration stops
    once the relative objective change is below ``rel_tol`` while the
    splitting residual ``||L - J||_F + ||S - R||_F`` is at most
    ``feas_tol * ||Y||_F``. ``warm_lam1`` and
    ``warm_lam2`` override the weights of the internal L1 warm-start solve
    (default: same as ``lam1``/``lam2``).
    """

    regularizer: str = "TL1"
    lam1: float = 1e-4
    lam2: float = 1e-6
    a1: float = 10.0
    a2: float = 0.1
    zeta: float = 10.0
    rho1: float = 1e-7
    rho2: float = 1e-7
    rho_decay: float = 0.9
    rel_tol: float = 1e-3
    feas_tol: float = 1e-3
    max_iter: int = 1000
    warm_lam1: float | None = None
    warm_lam2: float | None = None

    def __post_init__(self):
        if self.regularizer not in REGULARIZERS:
            raise ConfigurationError(f"regularizer must be one of {REGULARIZERS}, got {self.regularizer!r}")
        for name in ("lam1", "lam2", "zeta", "rho1", "rho2", "rel_tol", "feas_tol"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ConfigurationError(f"{name} must be a positive finite number, got {v}")
        for name in ("warm_lam1", "warm_lam2"):
            v = getattr(self, name)
            if v is not None and not (np.isfinite(v) and v > 0):
                raise ConfigurationError(f"{name} must be positive when given, got {v}")
        if self.regularizer == "TL1":
            try:
                check_a(self.a1)
                check_a(self.a2)
            except ValueError as exc:
                raise ConfigurationError(str(exc)) from None
        if not (np.isfinite(self.rho_decay) and self.rho_decay > 0):
            raise ConfigurationError(f"rho_decay must be positive, got {self.rho_decay}")
        if not self.rel_tol < 1:
            raise ConfigurationError("rel_tol must be below 1")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ConfigurationError("max_iter must be a positive integer")

    def replace(self, **changes) -> "SolverConfig":
        return dataclasses.replace(self, **changes)

    def warm_start_config(self) -> "SolverConfig":
        return self.replace(
            regularizer="L1",
            lam1=self.warm_lam1 if self.warm_lam1 is not None else self.lam1,
            lam2=self.warm_lam2 if self.warm_lam2 is not None else self.lam2,
        )

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class SolverState:
    L: np.ndarray
    S: np.ndarray
    J: np.ndarray
    R: np.ndarray
    B: np.ndarray
    D: np.ndarray
    rho1: float
    rho2: float
    iter: int = 0
    objective: float = np.nan

    @classmethod
    def initial(cls, shape, cfg: SolverConfig, J0=None, R0=None) -> "SolverState":
        zeros = np.zeros(shape)
        J = zeros.copy() if J0 is None else clip(J0, cfg.zeta)
        R = zeros.copy() if R0 is None else clip(R0, cfg.zeta)
        return cls(L=J.copy(), S=R.copy(), J=J, R=R, B=zeros.copy(), D=zeros.copy(),
                   rho1=cfg.rho1, rho2=cfg.rho2)


@dataclass
class DecompositionResult:
    L_hat: np.ndarray
    S_hat: np.ndarray
    iterations: int
    objective_trace: list[float]
    primal_residuals: tuple[float, float]
    converged: bool
    config: SolverConfig | None = None
    warm_start: "DecompositionResult | None" = field(default=None, repr=False)

    def diagnostics(self) -> dict:
        return {
            "iterations": self.iterations,
            "converged": self.converged,
            "objective_trace": [float(f) for f in self.objective_trace],
            "primal_residuals": [float(r) for r in self.primal_residuals],
        }


def objective(L, S, obs: ObservationSet, cfg: SolverConfig) -> float:
    """Data misfit on the mask plus the penalties of ``cfg.regularizer``."""
    L, S = as_matrix(L, "L"), as_matrix(S, "S")
    if L.shape != obs.shape or S.shape != obs.shape:
        raise DimensionError(f"L {L.shape}, S {S.shape} do not match observations {obs.shape}")
    resid = obs.values - obs.mask * (L + S)
    fit = float(np.sum(resid * resid)) / obs.n_obs
    if cfg.regularizer == "TL1":
        return fit + cfg.lam1 * phi_singular(L, cfg.a1) + cfg.lam2 * phi_entrywise(S, cfg.a2)
    return fit + cfg.lam1 * float(np.sum(singular_values(L))) + cfg.lam2 * float(np.sum(np.abs(S)))


def step_L(state: SolverState, cfg: SolverConfig) -> np.ndarray:
    mu = cfg.lam1 / state.rho1
    if cfg.regularizer == "TL1":
        return prox_tl1_singular(state.J - state.B, cfg.a1, mu)
    return svt(state.J - state.B, mu)


def step_S(state: SolverState, cfg: SolverConfig) -> np.ndarray:
    mu = cfg.lam2 / state.rho2
    if cfg.regularizer == "TL1":
        return prox_tl1_matrix(state.R - state.D, cfg.a2, mu)
    return soft_threshold(state.R - state.D, mu)


def _box_ls(obs: ObservationSet, other, prior, rho: float, zeta: float, project: bool = True):
    # Entrywise minimizer of (1/N) T (Y - X - other)^2 + (rho/2) (X - prior)^2;
    # the quadratic's curvature is 2T/N + rho at every entry.
    w = 2.0 / obs.n_obs * obs.mask
    X = (w * (obs.values - other) + rho * prior) / (w + rho)
    return np.clip(X, -zeta, zeta) if project else X


def step_J(state: SolverState, cfg: SolverConfig, obs: ObservationSet, project: bool = True) -> np.ndarray:
    """J-update; uses the already-updated ``state.L``. ``project=False`` gives the pre-clip point."""
    return _box_ls(obs, state.R, state.L + state.B, state.rho1, cfg.zeta, project)


def step_R(state: SolverState, cfg: SolverConfig, obs: ObservationSet, project: bool = True) -> np.ndarray:
    """R-update; uses the already-updated ``state.S`` and ``state.J``."""
    return _box_ls(obs, state.J, state.S + state.D, state.rho2, cfg.zeta, project)


def step_duals(state: SolverState) -> tuple[np.ndarray, np.ndarray]:
    return state.B + (state.L - state.J), state.D + (state.S - state.R)


def _relative_change(f_new: float, f_old: float) -> float:
    if abs(f_old) < 1e-15:
        return abs(f_new - f_old)
    return abs((f_new - f_old) / f_old)


def solve(obs: ObservationSet, cfg: SolverConfig, init=None, callback=None) -> DecompositionResult:
    """Run the ADMM iteration until the stopping rule of ``cfg`` holds or
    ``cfg.max_iter`` iterations have been taken.

    For TL1 without ``init``, an L1 solve (see
    :meth:`SolverConfig.warm_start_config`) supplies the starting ``(J, R)``.
    ``init`` is an explicit ``(J0, R0)`` pair. ``callback(state)`` is called
    after every iteration.

    Raises
    ------
    DivergenceError
        If the objective becomes non-finite.
    NumericalFailure
        If an SVD fails; the partial result is attached as ``exc.partial``.
    """
    warm = None
    if init is None and cfg.regularizer == "TL1":
        warm = solve(obs, cfg.warm_start_config())
        init = (warm.L_hat, warm.S_hat)
    J0, R0 = (None, None) if init is None else init
    state = SolverState.initial(obs.shape, cfg, J0, R0)
    state.objective = objective(state.L, state.S, obs, cfg)
    trace = [state.objective]
    converged = False

    feas_bound = cfg.feas_tol * float(np.linalg.norm(obs.values))

    def residuals() -> tuple[float, float]:
        return (float(np.linalg.norm(state.L - state.J)),
                float(np.linalg.norm(state.S - state.R)))

    def result() -> DecompositionResult:
        return DecompositionResult(
            L_hat=state.L, S_hat=state.S, iterations=state.iter, objective_trace=trace,
            primal_residuals=residuals(), converged=converged, config=cfg, warm_start=warm,
        )

    while state.iter < cfg.max_iter:
        try:
            state.L = step_L(state, cfg)
        except NumericalFailure as exc:
            exc.partial = result()
            raise
        state.S = step_S(state, cfg)
        state.J = step_J(state, cfg, obs)
        state.R = step_R(state, cfg, obs)
        state.B, state.D = step_duals(state)
        state.iter += 1
        f_old, state.objective = state.objective, objective(state.L, state.S, obs, cfg)
        trace.append(state.objective)
        if callback is not None:
            callback(state)
        if not np.isfinite(state.objective):
            raise DivergenceError(f"objective became non-finite at iteration {state.iter}", state.iter)
        if _relative_change(state.objective, f_old) < cfg.rel_tol and sum(residuals()) <= feas_bound:
            converged = True
            break
        if cfg.rho_decay != 1.0:
            state.rho1 /= cfg.rho_decay
            state.rho2 /= cfg.rho_decay
            # scaled duals must follow the penalty change
            state.B *= cfg.rho_decay
            state.D *= cfg.rho_decay

    logger.debug("%s solve: %d iterations, converged=%s, f=%.6g",
                 cfg.regularizer, state.iter, converged, state.objective)
    return result()


def solve_l1(obs: ObservationSet, cfg: SolverConfig) -> DecompositionResult:
    """Convex baseline: nuclear norm plus entrywise l1, zero initialization."""
    return solve(obs, cfg.replace(regularizer="L1"), init=None)
