"""Per-trial cost and load metrics, plus cross-trial aggregation.

Communication cost is the distance-weighted sum of all message sizes
divided by the node count (file size normalized to 1, so a chunk is
1/ell).  Load is the total size served per node; the max over nodes is
the figure of merit.  Failed requests keep their partial fetches in
both metrics and are counted separately.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from codedlb.delivery import DeliveryLedger


@dataclass(frozen=True, eq=False)
class MetricsReport:
    comm_cost: float
    max_load: float
    load_vector: np.ndarray
    failures: int
    extra_chunks: int
    served_requests: int


def compute_metrics(ledger: DeliveryLedger, n: int) -> MetricsReport:
    """Reduce one delivery ledger to cost and load numbers for n nodes."""
    if n < 1:
        raise ValueError("n must be >= 1")
    load = np.bincount(ledger.server, weights=ledger.bits_fraction, minlength=n)
    comm = float((ledger.distance * ledger.bits_fraction).sum()) / n
    return MetricsReport(
        comm_cost=comm,
        max_load=float(load.max()),
        load_vector=load,
        failures=len(ledger.failures),
        extra_chunks=ledger.extra_chunks,
        served_requests=ledger.m_requests - len(ledger.failures),
    )


@dataclass(frozen=True)
class AggregateSummary:
    trials: int
    comm_cost_mean: float
    comm_cost_std: float
    comm_cost_ci95: float
    max_load_mean: float
    max_load_std: float
    max_load_ci95: float
    failure_rate: float


def _mean_std_ci(values: np.ndarray) -> tuple[float, float, float]:
    mean = float(values.mean())
    std = float(values.std(ddof=1)) if values.size > 1 else 0.0
    return mean, std, 1.96 * std / math.sqrt(values.size)


def aggregate(reports: list[MetricsReport]) -> AggregateSummary:
    """Mean / sample stddev / normal-approximation 95% CI across trials."""
    if not reports:
        raise ValueError("aggregate needs at least one report")
    cm, cs, cc = _mean_std_ci(np.array([r.comm_cost for r in reports]))
    lm, ls, lc = _mean_std_ci(np.array([r.max_load for r in reports]))
    failures = sum(r.failures for r in reports)
    requests = sum(r.failures + r.served_requests for r in reports)
    return AggregateSummary(
        trials=len(reports),
        comm_cost_mean=cm,
        comm_cost_std=cs,
        comm_cost_ci95=cc,
        max_load_mean=lm,
        max_load_std=ls,
        max_load_ci95=lc,
        failure_rate=failures / requests if requests else 0.0,
    )
