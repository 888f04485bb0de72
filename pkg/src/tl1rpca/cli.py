"""Command-line interface: ``tl1rpca <command> [options]``.

Commands
--------
simulate      run a simulation study and write per-trial and summary reports
gridsearch    score a hyperparameter grid and report the selected point
video         separate a PGM frame sequence into background and foreground
prox-check    compare the closed-form TL1 prox with a brute-force search
synth-video   write the moving-square synthetic video as PGM frames

Exit status is 0 on success, 2 for configuration errors, 3 for numerical
failures and 4 when a grid search has no feasible point.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .admm import SolverConfig
from .errors import ConfigurationError, RPCAError
from .experiments import ExperimentConfig, emit_report, grid_search, run_simulation, write_simulation
from .oracle import prox_check
from .simulation import synth_video
from .video import VideoJob, run_video, unstack_frames, write_frames

logger = logging.getLogger("tl1rpca")

# Settings that separate the default synthetic video well.
VIDEO_SOLVER = {
    "TL1": dict(lam1=1e-3, lam2=1e-8, a1=10.0, a2=0.1, warm_lam1=1e-4, warm_lam2=1e-6),
    "L1": dict(lam1=1e-4, lam2=1e-6),
}


GLOBAL_DEFAULTS = {"seed": None, "config": None, "out": None, "format": "csv", "verbose": False}


def _load_json(path) -> dict:
    try:
        d = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(d, dict):
        raise ConfigurationError(f"{path}: config must be a JSON object")
    return d


def _experiment(args) -> ExperimentConfig:
    d = _load_json(args.config) if args.config else {"schema_version": 1}
    if args.seed is not None:
        d["base_seed"] = args.seed
    for key in ("trials", "method"):
        v = getattr(args, key, None)
        if v is not None:
            d[key] = v
    return ExperimentConfig.from_dict(d)


def _out(args, default: str) -> Path:
    return Path(args.out if args.out is not None else default)


def cmd_simulate(args) -> int:
    exp = _experiment(args)
    report = run_simulation(exp)
    for p in write_simulation(report, _out(args, "results"), args.format):
        print(p)
    for agg in report.aggregates:
        print(f"{agg['method']}: RE {agg['re_L_mean']:.4g} (std {agg['re_L_std']:.2g}), "
              f"rank {agg['rank_L_mean']:.3g}, DC {agg['dice_S_mean']:.3g}, failed {agg['n_failed']}")
    return 0


def cmd_gridsearch(args) -> int:
    exp = _experiment(args)
    method = args.method if args.method in ("TL1", "L1") else "TL1"
    res = grid_search(exp, method, objective=args.objective)
    out = _out(args, "results")
    emit_report(res.table, out / f"grid_{method}.{args.format}", args.format)
    best = out / f"best_{method}.json"
    best.write_text(json.dumps(res.best.to_dict(), indent=2, sort_keys=True) + "\n")
    print(best)
    print(json.dumps(res.best.to_dict(), sort_keys=True))
    return 0


def _video_solver(args) -> SolverConfig:
    fields = dict(VIDEO_SOLVER[args.regularizer])
    if args.config:
        d = _load_json(args.config)
        d.pop("schema_version", None)
        fields.update(d)
    for key in ("lam1", "lam2", "a1", "a2"):
        v = getattr(args, key)
        if v is not None:
            fields[key] = v
    fields["regularizer"] = args.regularizer
    try:
        return SolverConfig(**fields)
    except TypeError as exc:
        raise ConfigurationError(f"bad solver settings: {exc}") from None


def cmd_video(args) -> int:
    out = _out(args, "video_out")
    job = VideoJob(source=args.input, width=args.width, height=args.height, frames=args.frames,
                   square_size=args.square_size, seed=args.seed or 0, output=str(out), zeta=args.zeta)
    res = run_video(job, _video_solver(args))
    row = {"method": args.regularizer, **res.report.to_dict(), "iterations": res.result.iterations}
    print(emit_report([row], out / f"report.{args.format}", args.format))
    print(f"{args.regularizer}: rank {row['rank_L']}, card {row['card_S']}, RE {row['re_L']:.4g}, "
          f"DC {row['dice_S']:.4g}, recon {row['recon_err']:.3g}")
    return 0


def cmd_prox_check(args) -> int:
    res = prox_check(args.n, seed=args.seed or 0, tol=args.tol)
    x, a, mu = res.worst_case
    print(f"{res.n} triples, worst objective gap {res.worst_gap:.3e} "
          f"at x={x:.6g}, a={a:.6g}, mu={mu:.6g}: {'PASS' if res.passed else 'FAIL'}")
    return 0 if res.passed else 3


def cmd_synth_video(args) -> int:
    X, L0, S0 = synth_video(args.width, args.height, args.frames, args.square_size, args.seed or 0)
    out = _out(args, "synth_video")
    shape = (args.height, args.width)
    write_frames(out / "frames", unstack_frames(X, shape))
    write_frames(out / "truth_background", unstack_frames(L0, shape))
    write_frames(out / "truth_foreground", unstack_frames(S0, shape))
    print(out / "frames")
    return 0


def build_parser() -> argparse.ArgumentParser:
    # Global flags are accepted before or after the command name; SUPPRESS
    # keeps a subcommand's unset flag from clobbering one given earlier.
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--seed", type=int, help="base random seed")
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--out", help="output directory")
    common.add_argument("--format", choices=("json", "csv"), help="report format (default csv)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="tl1rpca", description=__doc__.split("\n")[0],
                                parents=[common])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="run a simulation study")
    s.add_argument("--trials", type=int, default=None)
    s.add_argument("--method", choices=("TL1", "L1", "both"), default=None)
    s.set_defaults(func=cmd_simulate)

    g = sub.add_parser("gridsearch", parents=[common], help="tune hyperparameters on a grid")
    g.add_argument("--method", choices=("TL1", "L1"), default="TL1")
    g.add_argument("--objective", choices=("min_RE", "unsupervised"), default=None)
    g.set_defaults(func=cmd_gridsearch, trials=None)

    v = sub.add_parser("video", parents=[common], help="background/foreground separation")
    v.add_argument("--input", default=None,
                   help="directory of PGM frames (default: synthetic moving square)")
    v.add_argument("--regularizer", choices=("TL1", "L1"), default="TL1")
    for name in ("lam1", "lam2", "a1", "a2"):
        v.add_argument(f"--{name}", type=float, default=None)
    v.add_argument("--zeta", type=float, default=1.0)
    v.add_argument("--width", type=int, default=30)
    v.add_argument("--height", type=int, default=30)
    v.add_argument("--frames", type=int, default=300)
    v.add_argument("--square-size", type=int, default=10)
    v.set_defaults(func=cmd_video)

    c = sub.add_parser("prox-check", parents=[common], help="brute-force check of the TL1 prox")
    c.add_argument("-n", type=int, default=1000)
    c.add_argument("--tol", type=float, default=1e-6)
    c.set_defaults(func=cmd_prox_check)

    y = sub.add_parser("synth-video", parents=[common], help="write the synthetic video")
    y.add_argument("--width", type=int, default=30)
    y.add_argument("--height", type=int, default=30)
    y.add_argument("--frames", type=int, default=300)
    y.add_argument("--square-size", type=int, default=10)
    y.set_defaults(func=cmd_synth_video)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    for key, default in GLOBAL_DEFAULTS.items():
        if not hasattr(args, key):
            setattr(args, key, default)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except RPCAError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
