import csv
import json
import math

import numpy as np
import pytest

from codedlb.harness import (
    CSV_HEADER,
    ExperimentConfig,
    PointConfig,
    TrialResult,
    preset_configs,
    run_experiment,
    run_many,
    run_point,
    run_preset,
    run_trial,
)
from codedlb.placement import InfeasibleError


def small_point(**kw):
    base = dict(topology="torus", n=25, k=5, m_cache=1, ell=2, gamma=0.5,
                strategy="coded", q=65537)
    base.update(kw)
    return PointConfig(**base)


# ---------------------------------------------------------------- configs


def test_point_validation_errors():
    with pytest.raises(ValueError):
        small_point(n=24)  # not a perfect square
    with pytest.raises(ValueError):
        small_point(strategy="teleport")
    with pytest.raises(ValueError):
        small_point(gamma=-0.1)
    with pytest.raises(ValueError):
        small_point(q=65536)  # composite
    with pytest.raises(ValueError):
        small_point(topology="ring")
    with pytest.raises(ValueError):
        small_point(k=0)
    with pytest.raises(ValueError):
        small_point(m_requests=0)


def test_whole_file_strategies_pin_ell():
    assert small_point(strategy="nearest", ell=7).ell == 1
    assert small_point(strategy="two-choice", ell=3).ell == 1
    assert small_point(strategy="coded", ell=7).ell == 7


def test_experiment_sweep_normalization():
    cfg = ExperimentConfig(strategy="nearest", n=(25, 49), k=3, trials=2, master_seed=1)
    pts = cfg.points()
    assert [p.n for p in pts] == [25, 49]
    assert all(p.strategy == "nearest" for p in pts)
    single = ExperimentConfig(strategy="nearest", n=25, k=3, trials=2, master_seed=1)
    assert len(single.points()) == 1


def test_experiment_rejects_two_swept_dims():
    with pytest.raises(ValueError):
        ExperimentConfig(
            strategy="coded", n=(25, 49), ell=(2, 4), k=3, trials=1, master_seed=1
        ).points()


# ---------------------------------------------------------------- trials


def test_run_trial_deterministic():
    p = small_point()
    a = run_trial(p, 3, 12345)
    b = run_trial(p, 3, 12345)
    assert a == b
    c = run_trial(p, 4, 12345)
    assert a != c


def test_run_trial_single_node_physics():
    p = PointConfig(topology="torus", n=1, k=1, m_cache=1, ell=1, gamma=0.0,
                    strategy="nearest")
    r = run_trial(p, 0, 7)
    assert r.comm_cost == 0.0
    assert r.max_load == 1.0
    assert r.failures == 0 and r.served_requests == 1


def test_run_trial_coded_saturation():
    p = PointConfig(topology="torus", n=9, k=1, m_cache=1, ell=1, gamma=0.0,
                    strategy="coded", q=65537)
    r = run_trial(p, 0, 11)
    assert r.comm_cost == 0.0
    assert r.failures == 0


def test_run_trial_all_strategies_run():
    for strat, ell in (("nearest", 1), ("coded", 3), ("uncoded-chunks", 3), ("two-choice", 1)):
        r = run_trial(small_point(strategy=strat, ell=ell), 0, 99)
        assert isinstance(r, TrialResult)
        assert r.served_requests + r.failures == 25


def test_run_trial_infeasible_coverage_propagates():
    p = PointConfig(topology="torus", n=4, k=100, m_cache=1, ell=1, gamma=0.0,
                    strategy="nearest", ensure_coverage=True)
    with pytest.raises(InfeasibleError):
        run_trial(p, 0, 1)


def test_coverage_removes_unservable_failures():
    p = small_point(strategy="nearest", ell=1, k=20, ensure_coverage=True, gamma=2.0)
    for trial in range(5):
        r = run_trial(p, trial, 3)
        assert r.failures == 0


def test_run_point_orders_trials():
    rs = run_point(small_point(), trials=5, master_seed=8, workers=1)
    assert [r.trial_index for r in rs] == [0, 1, 2, 3, 4]
    assert all(r.point == small_point() for r in rs)


# ---------------------------------------------------------------- files


def test_csv_header_and_replay(tmp_path):
    cfg = ExperimentConfig(strategy="coded", n=25, k=5, ell=2, gamma=0.5,
                           trials=4, master_seed=77)
    csv_path = tmp_path / "out.csv"
    json_path = tmp_path / "out.json"
    run_experiment(cfg, csv_path, json_path)
    lines = csv_path.read_text().splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == 5
    rows = list(csv.DictReader(lines))
    row = rows[2]
    point = PointConfig(
        topology=row["topology"], n=int(row["n"]), k=int(row["k"]),
        m_cache=int(row["m"]), ell=int(row["ell"]), gamma=float(row["gamma"]),
        strategy=row["strategy"], q=int(row["q"]),
    )
    again = run_trial(point, int(row["trial"]), 77)
    assert float(row["comm_cost"]) == again.comm_cost
    assert float(row["max_load"]) == again.max_load
    assert int(row["failures"]) == again.failures
    assert int(row["served"]) == again.served_requests


def test_rerun_writes_identical_bytes(tmp_path):
    cfg = ExperimentConfig(strategy="nearest", n=25, k=5, trials=3, master_seed=5)
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    run_experiment(cfg, a, tmp_path / "a.json")
    run_experiment(cfg, b, tmp_path / "b.json")
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_worker_count_independence(tmp_path):
    cfg = ExperimentConfig(strategy="coded", n=25, k=5, ell=2, gamma=0.0,
                           trials=6, master_seed=13)
    a = tmp_path / "w1.csv"
    b = tmp_path / "w2.csv"
    run_experiment(cfg, a, None, workers=1)
    run_experiment(cfg, b, None, workers=2)
    assert a.read_bytes() == b.read_bytes()


def test_json_summary_shape(tmp_path):
    cfg = ExperimentConfig(strategy="nearest", n=(25, 49), k=5, trials=3, master_seed=21)
    json_path = tmp_path / "s.json"
    run_experiment(cfg, tmp_path / "s.csv", json_path)
    points = json.loads(json_path.read_text())
    assert len(points) == 2
    first = points[0]
    assert first["n"] == 25 and first["strategy"] == "nearest"
    assert first["trials"] == 3
    assert first["master_seed"] == 21
    assert set(first["comm_cost"]) == {"mean", "std", "ci95"}
    assert set(first["max_load"]) == {"mean", "std", "ci95"}
    assert 0.0 <= first["failure_rate"] <= 1.0
    assert first["m_requests"] == 25
    vals = [json.loads((tmp_path / "s.csv").read_text().splitlines()[i + 1].split(",")[9])
            for i in range(3)]
    assert first["comm_cost"]["mean"] == pytest.approx(np.mean(vals))


def test_run_many_concatenates_series(tmp_path):
    cfgs = [
        ExperimentConfig(strategy="nearest", n=25, k=5, trials=2, master_seed=5),
        ExperimentConfig(strategy="two-choice", n=25, k=5, trials=2, master_seed=5),
    ]
    csv_path = tmp_path / "m.csv"
    summaries = run_many(cfgs, csv_path, tmp_path / "m.json")
    lines = csv_path.read_text().splitlines()
    assert len(lines) == 5
    assert {r.split(",")[7] for r in lines[1:]} == {"nearest", "two-choice"}
    assert len(summaries) == 2


# ---------------------------------------------------------------- presets


def test_preset_configs_shapes():
    fig1 = preset_configs("fig1")
    assert len(fig1) == 4
    assert all(c.trials == 5000 for c in fig1)
    assert all(c.n == (225, 625, 1225, 2025) for c in fig1)
    strategies = [(c.strategy, c.m_cache, c.ell) for c in fig1]
    assert ("nearest", 1, 1) in strategies and ("nearest", 5, 1) in strategies
    assert ("coded", 1, 5) in strategies and ("coded", 1, 10) in strategies

    fig2 = preset_configs("fig2")
    assert all(c.m_cache == (1, 2, 5, 10, 20, 50, 100) for c in fig2)
    assert {c.strategy for c in fig2} == {"nearest", "coded"}

    fig3 = preset_configs("fig3")
    assert len(fig3) == 1 and fig3[0].ell == tuple(range(1, 11))
    assert fig3[0].trials == 2000

    fig4 = preset_configs("fig4")
    assert fig4[0].gamma == (0.0, 0.5, 1.0, 1.5, 2.0)
    assert fig4[0].ensure_coverage and fig4[0].m_cache == 10 and fig4[0].ell == 10
    assert fig4[0].trials == 4000


def test_preset_scale_rounds_with_floor_one():
    assert preset_configs("fig3", scale=0.05)[0].trials == 100
    assert preset_configs("fig3", scale=1e-9)[0].trials == 1


def test_preset_unknown_name():
    with pytest.raises(ValueError):
        preset_configs("fig9")


def test_run_preset_smoke(tmp_path):
    csv_path, json_path = run_preset("fig3", tmp_path, scale=0.0005, master_seed=3)
    lines = csv_path.read_text().splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == 11  # 10 sweep points x 1 trial
    points = json.loads(json_path.read_text())
    assert [p["ell"] for p in points] == list(range(1, 11))
