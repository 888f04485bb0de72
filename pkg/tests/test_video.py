import numpy as np
import pytest

from tl1rpca import video as vd
from tl1rpca.admm import SolverConfig
from tl1rpca.errors import ConfigurationError, DimensionError
from tl1rpca.metrics import numerical_rank


def test_stack_single_frame():
    X = vd.stack_frames([np.array([[1.0, 2.0], [3.0, 4.0]])])
    np.testing.assert_array_equal(X, [[1], [2], [3], [4]])


def test_identical_frames_rank_one(rng):
    f = rng.uniform(size=(6, 5))
    assert numerical_rank(vd.stack_frames([f] * 7)) == 1


def test_stack_shape_and_round_trip(rng):
    frames = [rng.uniform(size=(144, 176)) for _ in range(4)]
    X = vd.stack_frames(frames)
    assert X.shape == (25344, 4)
    back = vd.unstack_frames(X, (144, 176))
    assert all(np.array_equal(a, b) for a, b in zip(frames, back))


def test_stack_mismatch():
    with pytest.raises(DimensionError):
        vd.stack_frames([np.zeros((2, 2)), np.zeros((2, 3))])
    with pytest.raises(DimensionError):
        vd.stack_frames([])
    with pytest.raises(DimensionError):
        vd.unstack_frames(np.zeros((5, 2)), (2, 2))


def test_pgm_round_trip(tmp_path, rng):
    codes = rng.integers(0, 256, size=(7, 9))
    frame = codes / 255
    p = vd.write_pgm(tmp_path / "f.pgm", frame)
    assert p.read_bytes().startswith(b"P5\n9 7\n255\n")
    np.testing.assert_array_equal(vd.read_pgm(p), frame)


def test_pgm_quantizes_and_clips(tmp_path):
    p = vd.write_pgm(tmp_path / "q.pgm", np.array([[-0.3, 0.5, 1.7]]))
    np.testing.assert_array_equal(vd.quantize([[-0.3, 0.5, 1.7]]), [[0, 128, 255]])
    np.testing.assert_allclose(vd.read_pgm(p), [[0.0, 128 / 255, 1.0]])


def test_read_ascii_and_16bit_pgm(tmp_path):
    p2 = tmp_path / "a.pgm"
    p2.write_text("P2\n# comment\n2 2\n15\n0 5\n10 15\n")
    np.testing.assert_allclose(vd.read_pgm(p2), [[0, 1 / 3], [2 / 3, 1]])
    p16 = tmp_path / "b.pgm"
    p16.write_bytes(b"P5 2 1 1000\n" + np.array([0, 1000], dtype=">u2").tobytes())
    np.testing.assert_allclose(vd.read_pgm(p16), [[0.0, 1.0]])
    bad = tmp_path / "c.pgm"
    bad.write_bytes(b"P6\n1 1\n255\n\x00\x00\x00")
    with pytest.raises(ValueError):
        vd.read_pgm(bad)


def test_frames_sorted_numerically(tmp_path):
    for j in (10, 2, 1):
        vd.write_pgm(tmp_path / f"img{j}.pgm", np.full((2, 2), j / 20))
    frames = vd.read_frames(tmp_path)
    assert [round(f[0, 0] * 20) for f in frames] == [1, 2, 10]
    with pytest.raises(ConfigurationError):
        vd.read_frames(tmp_path / "missing")


def test_write_frames_names(tmp_path):
    paths = vd.write_frames(tmp_path, [np.zeros((2, 2))] * 3)
    assert [p.name for p in paths] == ["frame_0000.pgm", "frame_0001.pgm", "frame_0002.pgm"]


def test_constant_video(tmp_path):
    frame = np.linspace(0.1, 0.9, 64).reshape(8, 8)
    vd.write_frames(tmp_path / "in", [frame] * 20)
    job = vd.VideoJob(source=str(tmp_path / "in"), output=str(tmp_path / "out"))
    res = vd.run_video(job, SolverConfig(lam1=1e-5, lam2=1e-6))
    assert res.report.rank_L == 1
    assert np.max(np.abs(res.foreground)) < 1e-3
    q = vd.quantize(frame) / 255
    assert np.max(np.abs(res.background[5] - q)) < 1e-3
    assert len(list((tmp_path / "out" / "background").glob("*.pgm"))) == 20
    assert res.result.config.zeta == 1.0


def test_synthetic_job_reports_truth_metrics():
    job = vd.VideoJob(width=12, height=12, frames=30, square_size=4)
    res = vd.run_video(job, SolverConfig(regularizer="L1", lam1=1e-4, lam2=1e-6))
    assert np.isfinite(res.report.re_L) and np.isfinite(res.report.dice_S)
    assert len(res.background) == 30 and res.background[0].shape == (12, 12)
