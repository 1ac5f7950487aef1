"""Experiment orchestration: configs, seeded trials, sweeps, CSV/JSON output.

A trial is placement -> trace -> delivery -> metrics, fully determined
by (point config, master seed, trial index).  Per-trial generators come
from a counter-keyed SeedSequence, so trials are independent, order-
insensitive, and identical under any worker count.  Sweeps vary exactly
one of n / m / ell / gamma; every trial lands in one CSV row and every
sweep point in one JSON summary object.
"""

from __future__ import annotations

import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from codedlb.delivery import (
    deliver_coded,
    deliver_nearest_replica,
    deliver_two_choice,
    deliver_uncoded_chunks,
    generate_trace,
)
from codedlb.fieldcode import PrimeField, _VECTOR_Q_LIMIT, is_prime
from codedlb.metrics import aggregate, compute_metrics
from codedlb.placement import (
    ensure_coverage,
    place_coded,
    place_uncoded,
    place_uncoded_chunks,
)
from codedlb.popularity import make_profile
from codedlb.topology import Topology

STRATEGIES = ("nearest", "coded", "uncoded-chunks", "two-choice")
TOPOLOGIES = ("torus", "grid")
SWEEPABLE = ("n", "m_cache", "ell", "gamma")
WORKERS_ENV = "CODEDLB_WORKERS"
CSV_HEADER = (
    "trial,topology,n,k,m,ell,gamma,strategy,q,"
    "comm_cost,max_load,failures,extra_chunks,served"
)


@dataclass(frozen=True)
class PointConfig:
    """One fully resolved simulation setting (no swept dimensions)."""

    topology: str = "torus"
    n: int = 2025
    k: int = 100
    m_cache: int = 1
    ell: int = 1
    gamma: float = 0.0
    strategy: str = "nearest"
    q: int = 65537
    ensure_coverage: bool = False
    m_requests: Optional[int] = None

    def __post_init__(self) -> None:
        if self.topology not in TOPOLOGIES:
            raise ValueError(f"topology must be one of {TOPOLOGIES}, got {self.topology!r}")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if self.n < 1 or math.isqrt(self.n) ** 2 != self.n:
            raise ValueError(f"n must be a positive perfect square, got {self.n}")
        for name in ("k", "m_cache", "ell"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        object.__setattr__(self, "gamma", float(self.gamma))
        if not math.isfinite(self.gamma) or self.gamma < 0:
            raise ValueError(f"gamma must be finite and >= 0, got {self.gamma}")
        if not is_prime(self.q) or self.q >= _VECTOR_Q_LIMIT:
            raise ValueError(f"q must be a prime below 2^31, got {self.q}")
        if self.m_requests is not None and self.m_requests < 1:
            raise ValueError("m_requests must be >= 1 when given")
        if self.strategy in ("nearest", "two-choice"):
            object.__setattr__(self, "ell", 1)  # whole files only

    @property
    def effective_m_requests(self) -> int:
        return self.n if self.m_requests is None else self.m_requests


@dataclass(frozen=True)
class TrialResult:
    point: PointConfig
    trial_index: int
    comm_cost: float
    max_load: float
    failures: int
    extra_chunks: int
    served_requests: int


Sweep = Union[int, float, Sequence]


@dataclass(frozen=True)
class ExperimentConfig:
    """A sweep over at most one of n / m_cache / ell / gamma."""

    strategy: str = "nearest"
    topology: str = "torus"
    n: Sweep = 2025
    k: int = 100
    m_cache: Sweep = 1
    ell: Sweep = 1
    gamma: Sweep = 0.0
    q: int = 65537
    ensure_coverage: bool = False
    m_requests: Optional[int] = None
    trials: int = 100
    master_seed: int = 42

    def __post_init__(self) -> None:
        for name in SWEEPABLE:
            v = getattr(self, name)
            if isinstance(v, (list, tuple, np.ndarray)):
                object.__setattr__(self, name, tuple(v))
        swept = [name for name in SWEEPABLE if isinstance(getattr(self, name), tuple)]
        if len(swept) > 1:
            raise ValueError(f"at most one swept dimension, got {swept}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must fit in 64 unsigned bits")

    def points(self) -> list[PointConfig]:
        swept = [name for name in SWEEPABLE if isinstance(getattr(self, name), tuple)]
        base = dict(
            topology=self.topology,
            n=self.n,
            k=self.k,
            m_cache=self.m_cache,
            ell=self.ell,
            gamma=self.gamma,
            strategy=self.strategy,
            q=self.q,
            ensure_coverage=self.ensure_coverage,
            m_requests=self.m_requests,
        )
        if not swept:
            return [PointConfig(**base)]
        axis = swept[0]
        out = []
        for value in getattr(self, axis):
            out.append(PointConfig(**{**base, axis: value}))
        return out


def run_trial(point: PointConfig, trial_index: int, master_seed: int) -> TrialResult:
    """One independent simulation, reproducible from the arguments alone."""
    seq = np.random.SeedSequence(entropy=(master_seed, trial_index))
    place_rng, trace_rng, deliver_rng = (np.random.default_rng(c) for c in seq.spawn(3))
    t = Topology.from_nodes(point.n, wrap=(point.topology == "torus"))
    profile = make_profile(point.k, point.gamma)
    if point.strategy == "coded":
        fieldq = PrimeField(point.q)
        cache = place_coded(t, profile, point.m_cache, point.ell, fieldq, place_rng)
    elif point.strategy == "uncoded-chunks":
        cache = place_uncoded_chunks(t, profile, point.m_cache, point.ell, place_rng)
    else:
        cache = place_uncoded(t, profile, point.m_cache, place_rng)
    if point.ensure_coverage:
        cache = ensure_coverage(cache, place_rng)
    trace = generate_trace(t, profile, point.effective_m_requests, trace_rng)
    if point.strategy == "coded":
        ledger = deliver_coded(t, cache, trace, fieldq, deliver_rng)
    elif point.strategy == "uncoded-chunks":
        ledger = deliver_uncoded_chunks(t, cache, trace, deliver_rng)
    elif point.strategy == "two-choice":
        ledger = deliver_two_choice(t, cache, trace, rng=deliver_rng)
    else:
        ledger = deliver_nearest_replica(t, cache, trace, deliver_rng)
    rep = compute_metrics(ledger, t.n)
    return TrialResult(
        point=point,
        trial_index=trial_index,
        comm_cost=rep.comm_cost,
        max_load=rep.max_load,
        failures=rep.failures,
        extra_chunks=rep.extra_chunks,
        served_requests=rep.served_requests,
    )


def _trial_task(args: tuple[PointConfig, int, int]) -> TrialResult:
    return run_trial(*args)


def _resolve_workers(workers: Optional[int]) -> int:
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get(WORKERS_ENV)
    return max(1, int(env)) if env else 1


def run_point(
    point: PointConfig, trials: int, master_seed: int, workers: Optional[int] = None
) -> list[TrialResult]:
    """All trials of one sweep point, in trial order."""
    workers = _resolve_workers(workers)
    tasks = [(point, i, master_seed) for i in range(trials)]
    if workers <= 1:
        return [run_trial(*t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        chunk = max(1, trials // (workers * 4))
        return list(pool.map(_trial_task, tasks, chunksize=chunk))


def _csv_text(results: list[TrialResult]) -> str:
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    for r in results:
        p = r.point
        buf.write(
            f"{r.trial_index},{p.topology},{p.n},{p.k},{p.m_cache},{p.ell},"
            f"{p.gamma},{p.strategy},{p.q},{r.comm_cost},{r.max_load},"
            f"{r.failures},{r.extra_chunks},{r.served_requests}\n"
        )
    return buf.getvalue()


def _point_summary(point: PointConfig, master_seed: int, results: list[TrialResult]) -> dict:
    agg = aggregate(results)
    return {
        "topology": point.topology,
        "n": point.n,
        "k": point.k,
        "m": point.m_cache,
        "ell": point.ell,
        "gamma": point.gamma,
        "strategy": point.strategy,
        "q": point.q,
        "ensure_coverage": point.ensure_coverage,
        "m_requests": point.effective_m_requests,
        "master_seed": master_seed,
        "trials": agg.trials,
        "comm_cost": {
            "mean": agg.comm_cost_mean,
            "std": agg.comm_cost_std,
            "ci95": agg.comm_cost_ci95,
        },
        "max_load": {
            "mean": agg.max_load_mean,
            "std": agg.max_load_std,
            "ci95": agg.max_load_ci95,
        },
        "failure_rate": agg.failure_rate,
    }


def _atomic_write(path, text: str) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def run_many(
    configs: Sequence[ExperimentConfig],
    csv_path,
    json_path=None,
    workers: Optional[int] = None,
) -> list[dict]:
    """Run several experiment series into one CSV and one JSON summary list."""
    all_results: list[TrialResult] = []
    summaries: list[dict] = []
    for cfg in configs:
        for point in cfg.points():
            results = run_point(point, cfg.trials, cfg.master_seed, workers)
            all_results.extend(results)
            summaries.append(_point_summary(point, cfg.master_seed, results))
    _atomic_write(csv_path, _csv_text(all_results))
    if json_path is not None:
        _atomic_write(json_path, json.dumps(summaries, indent=2) + "\n")
    return summaries


def run_experiment(
    config: ExperimentConfig, csv_path, json_path=None, workers: Optional[int] = None
) -> list[dict]:
    return run_many([config], csv_path, json_path, workers)


def preset_configs(name: str, scale: float = 1.0, master_seed: int = 42) -> list[ExperimentConfig]:
    """Bundled figure-style sweeps; scale multiplies the trial counts."""

    def trials(t: int) -> int:
        return max(1, round(t * scale))

    common = dict(topology="torus", k=100, master_seed=master_seed)
    n_grid = (225, 625, 1225, 2025)
    if name == "fig1":
        return [
            ExperimentConfig(strategy="nearest", n=n_grid, m_cache=1,
                             trials=trials(5000), **common),
            ExperimentConfig(strategy="nearest", n=n_grid, m_cache=5,
                             trials=trials(5000), **common),
            ExperimentConfig(strategy="coded", n=n_grid, m_cache=1, ell=5,
                             trials=trials(5000), **common),
            ExperimentConfig(strategy="coded", n=n_grid, m_cache=1, ell=10,
                             trials=trials(5000), **common),
        ]
    if name == "fig2":
        m_grid = (1, 2, 5, 10, 20, 50, 100)
        return [
            ExperimentConfig(strategy="nearest", n=2025, m_cache=m_grid,
                             trials=trials(5000), **common),
            ExperimentConfig(strategy="coded", n=2025, m_cache=m_grid, ell=10,
                             trials=trials(5000), **common),
        ]
    if name == "fig3":
        return [
            ExperimentConfig(strategy="coded", n=2025, m_cache=1,
                             ell=tuple(range(1, 11)), trials=trials(2000), **common),
        ]
    if name == "fig4":
        return [
            ExperimentConfig(strategy="coded", n=2025, m_cache=10, ell=10,
                             gamma=(0.0, 0.5, 1.0, 1.5, 2.0), ensure_coverage=True,
                             trials=trials(4000), **common),
        ]
    raise ValueError(f"unknown preset {name!r}; expected fig1..fig4")


def run_preset(
    name: str,
    out_dir,
    scale: float = 1.0,
    master_seed: int = 42,
    workers: Optional[int] = None,
) -> tuple[Path, Path]:
    """Run a bundled sweep into {name}.csv and {name}_summary.json."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{name}.csv"
    json_path = out_dir / f"{name}_summary.json"
    run_many(preset_configs(name, scale, master_seed), csv_path, json_path, workers)
    return csv_path, json_path
