"""Frame I/O and background/foreground separation of grayscale video.

Frames are stored as binary PGM (P5) files, one per frame, with zero-padded
numeric names (``frame_0000.pgm``, ...). Pixel values are scaled to [0, 1]
on load. A sequence of ``t`` frames of shape ``(h, w)`` is stacked into an
``(h*w, t)`` matrix whose columns are the row-major flattened frames.
"""

from __future__ import annotations

import re
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .admm import DecompositionResult, ObservationSet, SolverConfig, solve
from .errors import ConfigurationError, DimensionError
from .metrics import EvalReport, evaluate
from .simulation import synth_video


def read_pgm(path) -> np.ndarray:
    """Read a P5 (binary) or P2 (ASCII) PGM file as floats in [0, 1]."""
    data = Path(path).read_bytes()
    tokens: list[bytes] = []
    pos = 0
    # header: magic, width, height, maxval, with '#' comments allowed
    while len(tokens) < 4:
        m = re.compile(rb"\s*(#[^\n]*\n\s*)*(\S+)").match(data, pos)
        if m is None:
            raise ValueError(f"{path}: truncated PGM header")
        tokens.append(m.group(2))
        pos = m.end()
    magic, w, h, maxval = tokens[0], int(tokens[1]), int(tokens[2]), int(tokens[3])
    if magic == b"P5":
        pos += 1  # single whitespace byte before the raster
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        count = w * h
        raw = np.frombuffer(data, dtype=dtype, count=count, offset=pos)
    elif magic == b"P2":
        raw = np.array(data[pos:].split(), dtype=np.int64)
        if raw.size != w * h:
            raise ValueError(f"{path}: expected {w * h} pixels, found {raw.size}")
    else:
        raise ValueError(f"{path}: not a grayscale PGM file (magic {magic!r})")
    return raw.reshape(h, w).astype(np.float64) / maxval


def quantize(frame) -> np.ndarray:
    """8-bit pixel codes for values in [0, 1]; out-of-range values are clipped."""
    return np.rint(np.clip(np.asarray(frame, dtype=np.float64), 0.0, 1.0) * 255).astype(np.uint8)


def write_pgm(path, frame) -> Path:
    """Write a 2-D array with values in [0, 1] as an 8-bit P5 PGM."""
    codes = quantize(frame)
    if codes.ndim != 2:
        raise DimensionError("a frame must be 2-D")
    h, w = codes.shape
    path = Path(path)
    path.write_bytes(b"P5\n%d %d\n255\n" % (w, h) + codes.tobytes())
    return path


def _frame_index(p: Path) -> int:
    digits = re.findall(r"\d+", p.stem)
    if not digits:
        raise ConfigurationError(f"frame file {p.name} carries no frame number")
    return int(digits[-1])


def read_frames(directory) -> list[np.ndarray]:
    """All ``*.pgm`` frames of ``directory`` in frame-number order."""
    paths = sorted(Path(directory).glob("*.pgm"), key=_frame_index)
    if not paths:
        raise ConfigurationError(f"no .pgm frames found in {directory}")
    return [read_pgm(p) for p in paths]


def write_frames(directory, frames, prefix: str = "frame") -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    width = max(4, len(str(len(frames) - 1)))
    return [write_pgm(directory / f"{prefix}_{j:0{width}d}.pgm", f) for j, f in enumerate(frames)]


def stack_frames(frames) -> np.ndarray:
    """Stack same-shape frames as the columns of an ``(h*w, t)`` matrix."""
    frames = [np.asarray(f, dtype=np.float64) for f in frames]
    if not frames:
        raise DimensionError("need at least one frame")
    shape = frames[0].shape
    for j, f in enumerate(frames):
        if f.ndim != 2 or f.shape != shape:
            raise DimensionError(f"frame {j} has shape {f.shape}, expected {shape}")
    return np.stack([f.ravel() for f in frames], axis=1)


def unstack_frames(X, frame_shape: tuple[int, int]) -> list[np.ndarray]:
    X = np.asarray(X, dtype=np.float64)
    h, w = frame_shape
    if X.ndim != 2 or X.shape[0] != h * w:
        raise DimensionError(f"matrix of shape {X.shape} does not hold {h}x{w} frames")
    return [X[:, j].reshape(h, w).copy() for j in range(X.shape[1])]


@dataclass
class VideoJob:
    """Where frames come from and where separated frames go.

    With ``source=None`` the moving-square synthetic video is generated
    from ``width``, ``height``, ``frames``, ``square_size`` and ``seed``.
    """

    source: str | None = None
    width: int = 30
    height: int = 30
    frames: int = 300
    square_size: int = 10
    seed: int = 0
    output: str | None = None
    zeta: float = 1.0


@dataclass
class VideoResult:
    background: list[np.ndarray]
    foreground: list[np.ndarray]
    report: EvalReport
    result: DecompositionResult


def load_job(job: VideoJob):
    """Return ``(X, frame_shape, L0, S0)``; the truth is None for real footage."""
    if job.source is None:
        X, L0, S0 = synth_video(job.width, job.height, job.frames, job.square_size, job.seed)
        return X, (job.height, job.width), L0, S0
    frames = read_frames(job.source)
    return stack_frames(frames), frames[0].shape, None, None


def run_video(job: VideoJob, cfg: SolverConfig) -> VideoResult:
    """Separate a video into a low-rank background and a sparse foreground.

    Every pixel is observed, so the mask is all ones. The box bound is taken
    from ``job.zeta``. Separated frames are written under ``job.output``
    (``background/`` and ``foreground/``) when it is set.
    """
    X, shape, L0, S0 = load_job(job)
    obs = ObservationSet.from_matrix(X)
    assert obs.n_obs == X.size
    cfg = cfg.replace(zeta=job.zeta)
    t0 = time.perf_counter()
    res = solve(obs, cfg)
    elapsed = time.perf_counter() - t0
    report = evaluate(res.L_hat, res.S_hat, obs, L0, S0, runtime_seconds=elapsed)
    bg = unstack_frames(res.L_hat, shape)
    fg = unstack_frames(res.S_hat, shape)
    if job.output is not None:
        out = Path(job.output)
        write_frames(out / "background", bg)
        write_frames(out / "foreground", fg)
    return VideoResult(bg, fg, report, res)
