import numpy as np
import pytest

from tl1rpca import metrics as mt
from tl1rpca.admm import ObservationSet
from tl1rpca.errors import DegenerateReferenceError, DimensionError
from tl1rpca.regularizers import prox_tl1_matrix


def test_relative_error(rng):
    A = rng.standard_normal((4, 3))
    assert mt.relative_error(A, A) == 0
    assert mt.relative_error(np.zeros_like(A), A) == pytest.approx(1.0)
    assert mt.relative_error(2 * A, A) == pytest.approx(1.0)
    with pytest.raises(DegenerateReferenceError):
        mt.relative_error(A, np.zeros_like(A))
    with pytest.raises(DimensionError):
        mt.relative_error(A, A.T)


def test_dice():
    a = np.array([[1.0, 0, 2], [0, 0, 0]])
    assert mt.dice(a, 3 * a) == 1.0
    b = np.array([[0.0, 1, 0], [0, 0, 0]])
    assert mt.dice(a, b) == 0.0
    c = np.array([[5.0, 0, 0], [0, 1, 0]])
    assert mt.dice(a, c) == 0.5
    assert mt.dice(np.zeros((2, 2)), np.zeros((2, 2))) == 1.0


def test_numerical_rank(rng):
    assert mt.numerical_rank(np.zeros((3, 3))) == 0
    assert mt.numerical_rank(np.diag([1.0, 1e-12])) == 1
    U, V = rng.standard_normal((20, 5)), rng.standard_normal((15, 5))
    assert mt.numerical_rank(U @ V.T) == 5


def test_cardinality(rng):
    assert mt.cardinality(np.zeros((3, 3))) == 0
    A = np.zeros((3, 3))
    A[0, 0], A[1, 2], A[2, 1], A[2, 2] = 1.0, -2.0, 3.0, 1e-10
    assert mt.cardinality(A) == 3
    small = rng.uniform(-0.1, 0.1, (6, 6))
    assert mt.cardinality(prox_tl1_matrix(small, 1.0, 10.0)) == 0


def test_reconstruction_error(rng):
    Y = rng.standard_normal((5, 5))
    mask = (rng.uniform(size=Y.shape) < 0.6).astype(float)
    mask[0, 0] = 1
    obs = ObservationSet.from_matrix(Y, mask)
    L = rng.standard_normal(Y.shape)
    S = np.where(mask == 1, Y - L, 7.0)
    assert mt.reconstruction_error(obs, L, S) == pytest.approx(0.0, abs=1e-15)
    zero = np.zeros_like(Y)
    assert mt.reconstruction_error(obs, zero, zero) == 1.0
    scaled = ObservationSet.from_matrix(3 * Y, mask)
    assert mt.reconstruction_error(scaled, 3 * L, zero) == pytest.approx(mt.reconstruction_error(obs, L, zero))


def test_evaluate_without_truth(rng):
    obs = ObservationSet.from_matrix(rng.standard_normal((4, 4)))
    rep = mt.evaluate(obs.values, np.zeros((4, 4)), obs)
    assert np.isnan(rep.re_L) and np.isnan(rep.dice_S)
    assert rep.rank_L == 4 and rep.card_S == 0 and rep.recon_err == 0
    assert set(rep.to_dict()) == {"re_L", "dice_S", "rank_L", "card_S", "recon_err", "runtime_seconds"}
