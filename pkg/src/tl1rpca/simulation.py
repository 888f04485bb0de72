"""Ground-truth generators, sampling schemes and noise for simulation studies.

Every generator is a pure function of its dimensions, parameters and an
integer seed. Independent streams for one trial are derived with
:func:`trial_rng`, which mixes ``(base_seed, trial, stream)`` through
``numpy.random.SeedSequence``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .admm import ObservationSet
from .dense import as_matrix
from .errors import ConfigurationError, DegenerateReferenceError

SCHEMES = ("uniform", "nonuniform")

# stream ids for trial_rng
LOWRANK, SPARSE, MASK, NOISE = 0, 1, 2, 3


def trial_rng(base_seed: int, trial: int = 0, stream: int = 0) -> np.random.Generator:
    """Generator for one (trial, stream) pair, reproducible from ``base_seed``."""
    return np.random.default_rng(np.random.SeedSequence([int(base_seed), int(trial), int(stream)]))


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class SamplingScheme:
    kind: str = "uniform"

    def __post_init__(self):
        if self.kind not in SCHEMES:
            raise ConfigurationError(f"sampling scheme must be one of {SCHEMES}, got {self.kind!r}")

    def weights(self, m: int) -> np.ndarray:
        """Marginal probability vector over ``m`` row (or column) indices."""
        if self.kind == "uniform":
            return np.full(m, 1.0 / m)
        if m < 10:
            raise ConfigurationError(f"non-uniform sampling needs dimensions >= 10, got {m}")
        idx = np.arange(1, m + 1)
        w = np.ones(m)
        w[idx <= m // 10] = 2.0
        w[(idx > m // 10) & (idx <= m // 5)] = 4.0
        return w / w.sum()


def probability_matrix(scheme: SamplingScheme | str, m1: int, m2: int) -> np.ndarray:
    """Entry sampling probabilities; the outer product of the marginals."""
    if isinstance(scheme, str):
        scheme = SamplingScheme(scheme)
    if scheme.kind == "uniform":
        return np.full((m1, m2), 1.0 / (m1 * m2))
    return np.outer(scheme.weights(m1), scheme.weights(m2))


def sample_mask(Pi, sampling_ratio: float, seed) -> np.ndarray:
    """Observe the ``round(SR * m1 * m2)`` entries with the largest score
    ``Pi_kl * r_kl``, ``r_kl ~ U[0, 1]``. Equal scores fall back to
    row-major index order.
    """
    Pi = as_matrix(Pi, "Pi")
    if not 0 < sampling_ratio <= 1:
        raise ConfigurationError(f"sampling ratio must lie in (0, 1], got {sampling_ratio}")
    n = int(round(sampling_ratio * Pi.size))
    scores = Pi * _rng(seed).uniform(0.0, 1.0, size=Pi.shape)
    order = np.argsort(-scores.ravel(), kind="stable")
    mask = np.zeros(Pi.size)
    mask[order[:n]] = 1.0
    return mask.reshape(Pi.shape)


def gen_lowrank(m1: int, m2: int, r: int, seed) -> np.ndarray:
    """``U @ V.T`` with i.i.d. N(0, 1/r) factors of inner dimension ``r``."""
    if not 1 <= r <= min(m1, m2):
        raise ConfigurationError(f"rank must lie in [1, {min(m1, m2)}], got {r}")
    rng = _rng(seed)
    scale = np.sqrt(1.0 / r)
    U = rng.normal(0.0, scale, size=(m1, r))
    V = rng.normal(0.0, scale, size=(m2, r))
    return U @ V.T


def gen_sparse(m1: int, m2: int, k_sparse: int, seed, within=None) -> np.ndarray:
    """``k_sparse`` entries at uniformly random positions, values U[-1, 1].

    With ``within`` (a 0/1 matrix) the support is drawn from its nonzero
    entries only.
    """
    if within is None:
        candidates = np.arange(m1 * m2)
    else:
        candidates = np.flatnonzero(as_matrix(within, "within").ravel())
    if not 0 <= k_sparse <= candidates.size:
        raise ConfigurationError(f"k_sparse must lie in [0, {candidates.size}], got {k_sparse}")
    rng = _rng(seed)
    S = np.zeros(m1 * m2)
    support = rng.choice(candidates, size=k_sparse, replace=False)
    vals = rng.uniform(-1.0, 1.0, size=k_sparse)
    # an exact 0.0 draw would break the support count
    vals[vals == 0.0] = 1.0
    S[support] = vals
    return S.reshape(m1, m2)


def sigma_for_snr(M0, mask, snr_db: float) -> float:
    """Noise level giving ``10 log10(mean_observed(M0^2) / sigma^2) = snr_db``."""
    M0, mask = as_matrix(M0, "M0"), as_matrix(mask, "mask")
    n = mask.sum()
    if n == 0:
        raise ConfigurationError("empty mask")
    power = float(np.sum((M0 * mask) ** 2)) / n
    if power == 0:
        raise DegenerateReferenceError("signal is identically zero on the mask")
    return float(np.sqrt(power / 10.0 ** (snr_db / 10.0)))


def observe(L0, S0, mask, sigma: float, seed) -> ObservationSet:
    """``Y = mask * (L0 + S0 + sigma * xi)`` with standard normal ``xi``."""
    M0 = as_matrix(L0, "L0") + as_matrix(S0, "S0")
    mask = as_matrix(mask, "mask")
    if sigma < 0:
        raise ConfigurationError("sigma must be nonnegative")
    Y = M0 if sigma == 0 else M0 + sigma * _rng(seed).standard_normal(M0.shape)
    return ObservationSet(mask, np.where(mask == 1, Y, 0.0))


@dataclass
class GroundTruth:
    L0: np.ndarray
    S0: np.ndarray
    mask: np.ndarray
    sigma: float
    obs: ObservationSet

    @property
    def n_corrupted_observed(self) -> int:
        """Corrupted entries that also fall on the mask."""
        return int(np.count_nonzero((self.S0 != 0) & (self.mask == 1)))


def make_problem(m1: int, m2: int, rank: int, k_sparse: int, sampling_ratio: float,
                 scheme: SamplingScheme | str = "uniform", snr_db: float | None = None,
                 base_seed: int = 0, trial: int = 0,
                 corrupt_observed_only: bool = True) -> GroundTruth:
    """One simulated instance; ``snr_db=None`` means noise-free.

    By default every corrupted entry is an observed one, so ``k_sparse``
    counts corrupted observations; pass ``corrupt_observed_only=False`` to
    place the support anywhere on the grid.
    """
    L0 = gen_lowrank(m1, m2, rank, trial_rng(base_seed, trial, LOWRANK))
    Pi = probability_matrix(scheme, m1, m2)
    mask = sample_mask(Pi, sampling_ratio, trial_rng(base_seed, trial, MASK))
    S0 = gen_sparse(m1, m2, k_sparse, trial_rng(base_seed, trial, SPARSE),
                    within=mask if corrupt_observed_only else None)
    sigma = 0.0 if snr_db is None else sigma_for_snr(L0 + S0, mask, snr_db)
    obs = observe(L0, S0, mask, sigma, trial_rng(base_seed, trial, NOISE))
    return GroundTruth(L0, S0, mask, sigma, obs)


def synth_video(w: int, h: int, t: int, square_size: int, seed):
    """Moving white square over a fixed random-noise background.

    Frames are ``h`` rows by ``w`` columns; each frame flattened in row-major
    order is one column of the returned ``(w*h, t)`` data matrix. The
    square's top-left corner moves linearly from ``(0, 0)`` at frame 0 to the
    bottom-right position at frame ``t - 1``. Pixels under the square are 1,
    so the foreground is ``1 - background`` there.

    Returns ``(frames_matrix, L0, S0)`` with ``frames_matrix = L0 + S0``.
    """
    if not 0 < square_size < min(w, h):
        raise ConfigurationError("square_size must be positive and smaller than both frame sides")
    if t < 2:
        raise ConfigurationError("need at least two frames")
    bg = _rng(seed).uniform(0.0, 1.0, size=(h, w))
    L0 = np.repeat(bg.reshape(-1, 1), t, axis=1)
    S0 = np.zeros((h * w, t))
    frac = np.arange(t) / (t - 1)
    rows = np.rint(frac * (h - square_size)).astype(int)
    cols = np.rint(frac * (w - square_size)).astype(int)
    for j in range(t):
        fg = np.zeros((h, w))
        r0, c0 = rows[j], cols[j]
        fg[r0:r0 + square_size, c0:c0 + square_size] = 1.0 - bg[r0:r0 + square_size, c0:c0 + square_size]
        S0[:, j] = fg.ravel()
    return L0 + S0, L0, S0
