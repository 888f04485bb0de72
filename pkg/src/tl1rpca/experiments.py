"""Simulation sweeps, hyperparameter grid search and report writing."""

from __future__ import annotations

import csv
import dataclasses
import io
import itertools
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .admm import SolverConfig, solve
from .errors import ConfigurationError, InfeasibleGridError, RPCAError
from .metrics import EvalReport, evaluate
from .simulation import SCHEMES, make_problem

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

#: Candidate values for the TL1 shape parameters and for both weights.
CANDIDATE_A = (1e-2, 5e-2, 1e-1, 1.0, 10.0, 100.0)
CANDIDATE_LAMBDA = tuple(10.0 ** -k for k in range(1, 10))

# Desk-scale grids, subsets of the candidate sets above.
DEFAULT_L1_GRID = {
    "lam1": [1e-3, 1e-4, 1e-5, 1e-6],
    "lam2": [1e-4, 1e-5, 1e-6, 1e-7],
}
DEFAULT_TL1_GRID = {
    "lam1": [1e-3, 1e-4, 1e-5],
    "lam2": [1e-6, 1e-7, 1e-8],
    "a1": [1.0, 10.0],
    "a2": [0.1, 1.0],
}

# Offset separating tuning trials from evaluation trials in the seed space.
TUNING_TRIAL_OFFSET = 1_000_000

METRIC_FIELDS = ("re_L", "dice_S", "rank_L", "card_S", "recon_err", "iterations")


def _check_grid(grid: dict, allow_off_grid: bool) -> dict:
    out = {}
    for key, values in grid.items():
        if key not in {f.name for f in dataclasses.fields(SolverConfig)}:
            raise ConfigurationError(f"grid parameter {key!r} is not a solver setting")
        values = list(values)
        if not values:
            raise ConfigurationError(f"grid for {key!r} is empty")
        if not allow_off_grid:
            allowed = {"lam1": CANDIDATE_LAMBDA, "lam2": CANDIDATE_LAMBDA,
                       "a1": CANDIDATE_A, "a2": CANDIDATE_A}.get(key)
            if allowed is not None:
                bad = [v for v in values if not any(math.isclose(v, c, rel_tol=1e-9) for c in allowed)]
                if bad:
                    raise ConfigurationError(f"grid values {bad} for {key!r} are outside the candidate set "
                                             "(set allow_off_grid to override)")
        out[key] = values
    return out


@dataclass
class ExperimentConfig:
    """One table cell: problem size, corruption, sampling, noise, methods.

    ``k_sparse`` defaults to ``round(corruption_fraction * N)`` corrupted
    observations. ``snr_db=None`` is the noise-free setting. ``solver`` and
    ``l1_solver`` hold fixed :class:`SolverConfig` fields for TL1 and L1;
    ``grid``/``l1_grid`` (parameter -> list of values) switch on tuning by
    grid search over ``tune_trials`` dedicated trials.
    """

    m1: int = 300
    m2: int = 300
    rank: int = 5
    k_sparse: int | None = None
    corruption_fraction: float = 0.1
    corrupt_observed_only: bool = True
    sampling_ratio: float = 0.2
    snr_db: float | None = 20.0
    scheme: str = "uniform"
    trials: int = 10
    base_seed: int = 0
    method: str = "both"
    solver: dict = field(default_factory=dict)
    l1_solver: dict = field(default_factory=dict)
    grid: dict | None = None
    l1_grid: dict | None = None
    tune_trials: int = 1
    tune_objective: str = "min_RE"
    allow_off_grid: bool = False
    workers: int = 1
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigurationError(f"unsupported schema_version {self.schema_version}; expected {SCHEMA_VERSION}")
        if self.method not in ("TL1", "L1", "both"):
            raise ConfigurationError(f"method must be TL1, L1 or both, got {self.method!r}")
        if self.scheme not in SCHEMES:
            raise ConfigurationError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.trials < 1 or self.tune_trials < 1 or self.workers < 1:
            raise ConfigurationError("trials, tune_trials and workers must be positive")
        if self.m1 < 1 or self.m2 < 1 or not 1 <= self.rank <= min(self.m1, self.m2):
            raise ConfigurationError("invalid dimensions or rank")
        if not 0 < self.sampling_ratio <= 1:
            raise ConfigurationError("sampling_ratio must lie in (0, 1]")
        if self.k_sparse is None and not 0 <= self.corruption_fraction <= 1:
            raise ConfigurationError("corruption_fraction must lie in [0, 1]")
        if self.tune_objective not in ("min_RE", "unsupervised"):
            raise ConfigurationError("tune_objective must be min_RE or unsupervised")
        if self.grid is not None:
            self.grid = _check_grid(self.grid, self.allow_off_grid)
        if self.l1_grid is not None:
            self.l1_grid = _check_grid(self.l1_grid, self.allow_off_grid)
        # fail early on bad solver fields
        self.solver_config("TL1")
        self.solver_config("L1")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigurationError(f"unknown experiment config keys: {sorted(unknown)}")
        if "schema_version" not in d:
            raise ConfigurationError("experiment config lacks schema_version")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        try:
            d = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(d, dict):
            raise ConfigurationError("experiment config must be a JSON object")
        return cls.from_dict(d)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def solver_config(self, method: str) -> SolverConfig:
        fields = dict(self.solver if method == "TL1" else self.l1_solver)
        fields["regularizer"] = method
        try:
            return SolverConfig(**fields)
        except TypeError as exc:
            raise ConfigurationError(f"bad solver settings for {method}: {exc}") from None

    def n_obs(self) -> int:
        return int(round(self.sampling_ratio * self.m1 * self.m2))

    def corruption_count(self) -> int:
        if self.k_sparse is not None:
            return int(self.k_sparse)
        base = self.n_obs() if self.corrupt_observed_only else self.m1 * self.m2
        return int(round(self.corruption_fraction * base))

    def problem(self, trial: int):
        return make_problem(
            self.m1, self.m2, self.rank, self.corruption_count(), self.sampling_ratio,
            scheme=self.scheme, snr_db=self.snr_db, base_seed=self.base_seed, trial=trial,
            corrupt_observed_only=self.corrupt_observed_only,
        )


def expand_grid(base: SolverConfig, grid: dict) -> list[SolverConfig]:
    """All grid points in lexicographic order of the grid's value lists."""
    keys = list(grid)
    return [base.replace(**dict(zip(keys, values))) for values in itertools.product(*grid.values())]


def _run_one(gt, cfg: SolverConfig, init=None) -> tuple[EvalReport, object]:
    t0 = time.perf_counter()
    res = solve(gt.obs, cfg, init=init)
    elapsed = time.perf_counter() - t0
    return evaluate(res.L_hat, res.S_hat, gt.obs, gt.L0, gt.S0, runtime_seconds=elapsed), res


def _score_point(args):
    exp, cfg, trials = args
    reports = []
    for trial in trials:
        gt = exp.problem(trial)
        init = None
        if cfg.regularizer == "TL1":
            warm = solve(gt.obs, cfg.warm_start_config())
            init = (warm.L_hat, warm.S_hat)
        try:
            rep, res = _run_one(gt, cfg, init)
        except RPCAError as exc:
            logger.warning("grid point %s failed: %s", cfg, exc)
            return None
        reports.append((rep, res.iterations))
    return reports


def _score_all(exp: ExperimentConfig, configs: list[SolverConfig]) -> list:
    trials = [TUNING_TRIAL_OFFSET + i for i in range(exp.tune_trials)]
    # Warm starts depend only on the warm-start config, so TL1 points that
    # share one are scored against a single cached L1 solve per trial.
    if exp.workers == 1:
        cache: dict = {}
        problems = {t: exp.problem(t) for t in trials}
        out = []
        for cfg in configs:
            reports = []
            for t in trials:
                gt = problems[t]
                init = None
                if cfg.regularizer == "TL1":
                    key = (t, cfg.warm_start_config())
                    if key not in cache:
                        warm = solve(gt.obs, cfg.warm_start_config())
                        cache[key] = (warm.L_hat, warm.S_hat)
                    init = cache[key]
                try:
                    rep, res = _run_one(gt, cfg, init)
                except RPCAError as exc:
                    logger.warning("grid point %s failed: %s", cfg, exc)
                    reports = None
                    break
                reports.append((rep, res.iterations))
            out.append(reports)
        return out
    with ProcessPoolExecutor(max_workers=exp.workers) as pool:
        return list(pool.map(_score_point, [(exp, cfg, trials) for cfg in configs]))


@dataclass
class GridSearchResult:
    best: SolverConfig
    table: list[dict]


def grid_search(exp: ExperimentConfig, method: str = "TL1", objective: str | None = None,
                base: SolverConfig | None = None, grid: dict | None = None) -> GridSearchResult:
    """Pick the best grid point for ``method``.

    ``min_RE`` minimizes the mean relative error of the low-rank part
    against the ground truth. ``unsupervised`` keeps points whose sparse part
    covers under 40% of the entries and whose reconstruction error is under
    1%, then takes the smallest nonzero rank (ties: smaller reconstruction
    error, then grid order).

    Raises
    ------
    InfeasibleGridError
        When no grid point passes the unsupervised filters.
    """
    objective = objective or exp.tune_objective
    base = base or exp.solver_config(method)
    if grid is None:
        grid = (exp.grid if method == "TL1" else exp.l1_grid) or (
            DEFAULT_TL1_GRID if method == "TL1" else DEFAULT_L1_GRID)
    configs = expand_grid(base, grid)
    if not configs:
        raise ConfigurationError("empty grid")
    scored = _score_all(exp, configs)

    table = []
    for order, (cfg, reports) in enumerate(zip(configs, scored)):
        row = {"order": order, **{k: getattr(cfg, k) for k in grid}}
        if reports is None:
            row.update(failed=True)
        else:
            for name in METRIC_FIELDS:
                vals = [it if name == "iterations" else getattr(rep, name) for rep, it in reports]
                row[name] = float(np.mean(vals))
            row["failed"] = False
        table.append(row)
    ok = [r for r in table if not r["failed"]]
    if objective == "min_RE":
        if not ok:
            raise InfeasibleGridError("every grid point failed", binding="solver failure")
        best = min(ok, key=lambda r: (r["re_L"], r["order"]))
    else:
        best = select_unsupervised(ok, exp.m1 * exp.m2)
    return GridSearchResult(best=configs[best["order"]], table=table)


def select_unsupervised(rows: list[dict], n_entries: int, max_sparsity: float = 0.40,
                        max_recon: float = 0.01) -> dict:
    """Apply the ground-truth-free selection rule to scored grid rows."""
    sparse_ok = [r for r in rows if r["card_S"] / n_entries < max_sparsity]
    recon_ok = [r for r in sparse_ok if r["recon_err"] < max_recon]
    survivors = [r for r in recon_ok if r["rank_L"] > 0]
    if not survivors:
        if not sparse_ok:
            binding = f"sparsity of S below {max_sparsity:.0%}"
        elif not recon_ok:
            binding = f"reconstruction error below {max_recon:.0%}"
        else:
            binding = "nonzero rank of L"
        raise InfeasibleGridError(f"no grid point satisfies: {binding}", binding=binding)
    return min(survivors, key=lambda r: (r["rank_L"], r["recon_err"], r["order"]))


@dataclass
class SimulationReport:
    rows: list[dict]
    aggregates: list[dict]
    tuned: dict[str, dict]
    timings: list[dict]


def tune(exp: ExperimentConfig) -> dict[str, SolverConfig]:
    """Fixed or grid-searched solver settings for each method in ``exp``.

    The L1 solution also warm-starts TL1, so when L1 is tuned its weights
    become TL1's warm-start weights unless ``solver`` pins them.
    """
    methods = ["L1", "TL1"] if exp.method == "both" else [exp.method]
    cfgs: dict[str, SolverConfig] = {}
    need_l1 = "L1" in methods or (exp.l1_grid is not None and "TL1" in methods)
    if need_l1:
        cfgs["L1"] = (grid_search(exp, "L1").best if exp.l1_grid is not None
                      else exp.solver_config("L1"))
    if "TL1" in methods:
        base = exp.solver_config("TL1")
        if "L1" in cfgs and exp.l1_grid is not None:
            base = base.replace(
                warm_lam1=exp.solver.get("warm_lam1", cfgs["L1"].lam1),
                warm_lam2=exp.solver.get("warm_lam2", cfgs["L1"].lam2),
            )
        cfgs["TL1"] = grid_search(exp, "TL1", base=base).best if exp.grid is not None else base
    return {m: cfgs[m] for m in methods}


def run_simulation(exp: ExperimentConfig) -> SimulationReport:
    """Tune, then run every method on ``exp.trials`` shared problem instances."""
    tuned = tune(exp)
    rows, timings = [], []
    for trial in range(exp.trials):
        gt = exp.problem(trial)
        l1_result = None
        for method, cfg in tuned.items():
            init = None
            # reuse the L1 fit as TL1's warm start when it is the same solve
            if method == "TL1" and l1_result is not None and cfg.warm_start_config() == tuned["L1"]:
                init = (l1_result.L_hat, l1_result.S_hat)
            row = {"method": method, "trial": trial}
            try:
                rep, res = _run_one(gt, cfg, init)
            except RPCAError as exc:
                row.update(status=f"failed: {exc}")
                rows.append(row)
                continue
            if method == "L1":
                l1_result = res
            d = rep.to_dict()
            timings.append({"method": method, "trial": trial, "runtime_seconds": d.pop("runtime_seconds")})
            row.update(d, iterations=res.iterations, converged=res.converged, status="ok")
            rows.append(row)
    return SimulationReport(rows=rows, aggregates=aggregate(rows),
                            tuned={m: c.to_dict() for m, c in tuned.items()}, timings=timings)


def aggregate(rows: list[dict]) -> list[dict]:
    """Mean and (population) standard deviation of each metric per method."""
    out = []
    for method in dict.fromkeys(r["method"] for r in rows):
        mine = [r for r in rows if r["method"] == method]
        ok = [r for r in mine if r.get("status") == "ok"]
        agg = {"method": method, "n_ok": len(ok), "n_failed": len(mine) - len(ok)}
        for name in METRIC_FIELDS:
            vals = np.array([r[name] for r in ok], dtype=float)
            agg[f"{name}_mean"] = float(vals.mean()) if ok else float("nan")
            agg[f"{name}_std"] = float(vals.std()) if ok else float("nan")
        out.append(agg)
    return out


def _fmt(v):
    if isinstance(v, bool) or v is None:
        return v
    if isinstance(v, (float, np.floating)):
        # NaN (missing ground truth) becomes null / an empty CSV cell
        return None if math.isnan(v) else float(f"{float(v):.6g}")
    if isinstance(v, np.integer):
        return int(v)
    return v


def _columns(rows: list[dict]) -> list[str]:
    cols: dict[str, None] = {}
    for r in rows:
        cols.update(dict.fromkeys(r))
    return list(cols)


def format_report(rows: list[dict], fmt: str = "csv") -> str:
    """Serialize rows with a stable column order and 6 significant digits."""
    if not rows:
        raise ConfigurationError("nothing to report")
    cols = _columns(rows)
    clean = [{c: _fmt(r.get(c)) for c in cols} for r in rows]
    if fmt == "json":
        return json.dumps(clean, indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        writer.writeheader()
        for r in clean:
            writer.writerow({c: "" if v is None else (f"{v:.6g}" if isinstance(v, float) else v)
                             for c, v in r.items()})
        return buf.getvalue()
    raise ConfigurationError(f"unknown report format {fmt!r}")


def emit_report(rows: list[dict], path, fmt: str = "csv") -> Path:
    path = Path(path)
    text = format_report(rows, fmt)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise RPCAError(f"cannot write report {path}: {exc}") from exc
    return path


def write_simulation(report: SimulationReport, out_dir, fmt: str = "csv") -> list[Path]:
    """Per-trial rows, aggregates and tuned settings; wall-clock timings go to
    a separate ``timings`` file so the other files are reproducible bytes."""
    out = Path(out_dir)
    ext = fmt
    paths = [
        emit_report(report.rows, out / f"trials.{ext}", fmt),
        emit_report(report.aggregates, out / f"summary.{ext}", fmt),
    ]
    tuned_path = out / "tuned.json"
    tuned_path.write_text(json.dumps(report.tuned, indent=2, sort_keys=True) + "\n")
    paths.append(tuned_path)
    if report.timings:
        paths.append(emit_report(report.timings, out / f"timings.{ext}", fmt))
    return paths
