import csv
import io
import json

import numpy as np
import pytest

from tl1rpca import experiments as ex
from tl1rpca.admm import SolverConfig
from tl1rpca.errors import ConfigurationError, InfeasibleGridError


def small(**kw):
    base = dict(schema_version=1, m1=30, m2=30, rank=2, sampling_ratio=0.6, snr_db=None,
                trials=2, base_seed=7, solver={"lam1": 1e-4, "lam2": 1e-6},
                l1_solver={"lam1": 1e-5, "lam2": 1e-6})
    base.update(kw)
    return ex.ExperimentConfig(**base)


def test_config_validation():
    with pytest.raises(ConfigurationError):
        small(method="L0")
    with pytest.raises(ConfigurationError):
        small(scheme="fancy")
    with pytest.raises(ConfigurationError):
        small(trials=0)
    with pytest.raises(ConfigurationError):
        small(schema_version=2)
    with pytest.raises(ConfigurationError):
        small(solver={"lam3": 1.0})
    with pytest.raises(ConfigurationError):
        small(grid={"lam1": [3e-4]})
    small(grid={"lam1": [3e-4]}, allow_off_grid=True)
    with pytest.raises(ConfigurationError):
        small(grid={"a1": []})
    with pytest.raises(ConfigurationError):
        small(grid={"nope": [1]})


def test_config_json_round_trip(tmp_path):
    cfg = small(grid={"lam1": [1e-4, 1e-5]})
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg.to_dict()))
    assert ex.ExperimentConfig.from_json(p) == cfg
    with pytest.raises(ConfigurationError):
        ex.ExperimentConfig.from_dict({"m1": 3})
    with pytest.raises(ConfigurationError):
        ex.ExperimentConfig.from_dict({"schema_version": 1, "bogus": 1})


def test_corruption_count():
    assert small().corruption_count() == 54
    assert small(k_sparse=10).corruption_count() == 10
    assert small(corrupt_observed_only=False).corruption_count() == 90


def test_expand_grid_order():
    cfgs = ex.expand_grid(SolverConfig(), {"lam1": [1e-3, 1e-4], "a1": [1.0, 10.0]})
    assert [(c.lam1, c.a1) for c in cfgs] == [(1e-3, 1.0), (1e-3, 10.0), (1e-4, 1.0), (1e-4, 10.0)]


def test_run_simulation_pairs_methods():
    rep = ex.run_simulation(small())
    assert [(r["method"], r["trial"]) for r in rep.rows] == [
        ("L1", 0), ("TL1", 0), ("L1", 1), ("TL1", 1)]
    assert all(r["status"] == "ok" for r in rep.rows)
    agg = {a["method"]: a for a in rep.aggregates}
    re = [r["re_L"] for r in rep.rows if r["method"] == "TL1"]
    assert agg["TL1"]["re_L_mean"] == pytest.approx(np.mean(re))
    assert agg["TL1"]["re_L_std"] == pytest.approx(np.std(re))
    assert "runtime_seconds" not in rep.rows[0]
    assert len(rep.timings) == 4


def test_failures_are_counted(monkeypatch):
    from tl1rpca.errors import DivergenceError
    real = ex.solve

    def flaky(obs, cfg, init=None):
        if cfg.regularizer == "TL1":
            raise DivergenceError("boom", 3)
        return real(obs, cfg, init=init)

    monkeypatch.setattr(ex, "solve", flaky)
    rep = ex.run_simulation(small())
    agg = {a["method"]: a for a in rep.aggregates}
    assert agg["TL1"]["n_failed"] == 2 and agg["TL1"]["n_ok"] == 0
    assert np.isnan(agg["TL1"]["re_L_mean"])
    assert agg["L1"]["n_ok"] == 2


def test_grid_search_picks_better_point():
    exp = small(method="L1")
    res = ex.grid_search(exp, "L1", grid={"lam1": [1e-1, 1e-5], "lam2": [1e-6]})
    assert res.best.lam1 == 1e-5
    assert res.table[0]["re_L"] > res.table[1]["re_L"]
    again = ex.grid_search(exp, "L1", grid={"lam1": [1e-1, 1e-5], "lam2": [1e-6]})
    assert again.best == res.best


def test_grid_search_workers_match_serial():
    grid = {"lam1": [1e-4, 1e-5], "lam2": [1e-6]}
    a = ex.grid_search(small(), "TL1", grid=grid)
    b = ex.grid_search(small(workers=2), "TL1", grid=grid)
    assert a.best == b.best
    assert [r["re_L"] for r in a.table] == [r["re_L"] for r in b.table]


def test_unsupervised_selection():
    rows = [
        {"order": 0, "rank_L": 4, "card_S": 10, "recon_err": 0.001},
        {"order": 1, "rank_L": 2, "card_S": 10, "recon_err": 0.005},
        {"order": 2, "rank_L": 2, "card_S": 10, "recon_err": 0.002},
        {"order": 3, "rank_L": 0, "card_S": 10, "recon_err": 0.001},
        {"order": 4, "rank_L": 1, "card_S": 50, "recon_err": 0.001},
        {"order": 5, "rank_L": 1, "card_S": 10, "recon_err": 0.02},
    ]
    assert ex.select_unsupervised(rows, 100)["order"] == 2


def test_unsupervised_infeasible():
    rows = [{"order": 0, "rank_L": 1, "card_S": 1, "recon_err": 0.5}]
    with pytest.raises(InfeasibleGridError) as info:
        ex.select_unsupervised(rows, 100)
    assert "reconstruction" in info.value.binding
    rows = [{"order": 0, "rank_L": 1, "card_S": 90, "recon_err": 0.0}]
    with pytest.raises(InfeasibleGridError, match="sparsity"):
        ex.select_unsupervised(rows, 100)


def test_unsupervised_grid_search_infeasible():
    # a huge penalty on both parts leaves everything unexplained
    exp = small(method="L1", tune_objective="unsupervised")
    with pytest.raises(InfeasibleGridError):
        ex.grid_search(exp, "L1", grid={"lam1": [1e-1], "lam2": [1e-1]})


def test_tune_passes_l1_pair_to_warm_start():
    exp = small(l1_grid={"lam1": [1e-1, 1e-5], "lam2": [1e-6]})
    tuned = ex.tune(exp)
    assert (tuned["TL1"].warm_lam1, tuned["TL1"].warm_lam2) == (1e-5, 1e-6)
    assert tuned["L1"].lam1 == 1e-5


ROWS = [{"method": "TL1", "trial": 0, "re_L": 0.123456789, "rank_L": 5, "ok": True, "x": float("nan")},
        {"method": "TL1", "trial": 1, "re_L": 1e-12, "rank_L": 6, "ok": False, "x": 2.0}]


def test_report_formats_agree():
    j = json.loads(ex.format_report(ROWS, "json"))
    c = list(csv.DictReader(io.StringIO(ex.format_report(ROWS, "csv"))))
    assert list(c[0]) == list(j[0]) == ["method", "trial", "re_L", "rank_L", "ok", "x"]
    for jr, cr in zip(j, c):
        for k, v in jr.items():
            if v is None:
                assert cr[k] == ""
            elif isinstance(v, bool) or isinstance(v, str):
                assert cr[k] == str(v)
            else:
                assert float(cr[k]) == v
    assert j[0]["re_L"] == 0.123457


def test_report_one_row_csv():
    text = ex.format_report(ROWS[:1], "csv")
    assert text.count("\n") == 2


def test_report_std_zero_for_identical_trials():
    row = {"method": "L1", "status": "ok", **{f: 1.0 for f in ex.METRIC_FIELDS}}
    agg = ex.aggregate([dict(row, trial=0), dict(row, trial=1)])
    assert all(agg[0][f"{f}_std"] == 0 for f in ex.METRIC_FIELDS)


def test_report_errors(tmp_path):
    with pytest.raises(ConfigurationError):
        ex.format_report([], "csv")
    with pytest.raises(ConfigurationError):
        ex.format_report(ROWS, "xml")
    blocker = tmp_path / "file"
    blocker.write_text("")
    from tl1rpca.errors import RPCAError
    with pytest.raises(RPCAError):
        ex.emit_report(ROWS, blocker / "sub" / "r.csv")


def test_sampling_ratio_trend():
    # more observations, better recovery, on matched settings
    errs = []
    for sr in (0.2, 0.3, 0.4):
        exp = small(m1=60, m2=60, rank=3, sampling_ratio=sr, snr_db=20.0, trials=2,
                    method="TL1", solver={"lam1": 1e-4, "lam2": 1e-6, "warm_lam1": 1e-5})
        errs.append(ex.aggregate(ex.run_simulation(exp).rows)[0]["re_L_mean"])
    assert errs[0] > errs[1] > errs[2]
