"""Built-in self checks behind the `validate` CLI subcommand.

A lean pass over the invariants that matter in the field: geometry
identities, popularity normalization, field axioms, decode round-trips,
placement statistics, ledger conservation laws, and trial determinism.
Each check prints one line; the suite returns the failure count.
"""

from __future__ import annotations

import math
import sys
import tempfile
from pathlib import Path

import numpy as np

from codedlb.delivery import (
    RequestTrace,
    deliver_coded,
    deliver_nearest_replica,
    generate_trace,
)
from codedlb.fieldcode import (
    PrimeField,
    decode,
    encode_chunk,
    full_rank_probability,
    rank_many,
    split_file,
)
from codedlb.harness import ExperimentConfig, PointConfig, run_experiment, run_trial
from codedlb.metrics import compute_metrics
from codedlb.placement import ensure_coverage, place_coded, place_uncoded
from codedlb.popularity import effective_chunk_prob, lambda_sum, make_profile
from codedlb.topology import Topology


def _check_ball_identity() -> None:
    t = Topology(11)
    for r in range(6):
        assert len(t.ball(17, r)) == 2 * r * (r + 1) + 1
    corner = Topology(3, wrap=False)
    assert corner.ball(0, 1) == {0, 1, 3}


def _check_metric_axioms() -> None:
    for wrap in (True, False):
        t = Topology(5, wrap=wrap)
        ids = np.arange(t.n)
        d = t.distance_matrix(ids, ids)
        assert (d == d.T).all()
        assert (np.diag(d) == 0).all()
        through = (d[:, None, :] + d[None, :, :].transpose(0, 2, 1)).min(axis=2)
        assert (through >= d).all()


def _check_zipf_profile() -> None:
    p = make_profile(3, 2.0)
    assert np.allclose(p.probs, [36 / 49, 9 / 49, 4 / 49], rtol=1e-12)
    big = make_profile(1000, 0.8)
    assert abs(big.probs.sum() - 1.0) < 1e-12
    assert (np.diff(big.probs) <= 0).all()


def _check_popularity_sandwich() -> None:
    val = lambda_sum(1.0, 3, 50)
    assert math.log(51 / 3) <= val <= 1 / 3 + math.log(50 / 3)
    assert effective_chunk_prob(0.01, 1, 10) == 1 - 0.99**10


def _check_field_axioms() -> None:
    f = PrimeField(7)
    for a in range(7):
        for b in range(7):
            assert f.add(a, b) == (a + b) % 7
            assert f.mul(a, b) == (a * b) % 7
            if b:
                assert f.mul(b, f.inv(b)) == 1
    big = PrimeField(65537)
    assert big.mul(12345, big.inv(12345)) == 1


def _check_full_rank_rates() -> None:
    assert full_rank_probability(2, 2) == 0.375
    assert full_rank_probability(2, 3) == 0.328125
    rng = np.random.default_rng(202)
    samples = 20000
    mats = rng.integers(0, 2, size=(samples, 2, 2))
    hit = float((rank_many(mats, 2) == 2).mean())
    se = math.sqrt(0.375 * 0.625 / samples)
    assert abs(hit - 0.375) <= 3 * se


def _check_code_round_trip() -> None:
    f = PrimeField(65537)
    rng = np.random.default_rng(7)
    payload = bytes(rng.integers(0, 256, size=100, dtype=np.uint8))
    cf = split_file(payload, 4, f)
    chunks = [encode_chunk(cf, f, rng=rng) for _ in range(4)]
    assert decode(chunks, 4, len(payload), f) == payload


def _check_placement_statistics() -> None:
    t = Topology(45)
    p = make_profile(100, 0.0)
    f = PrimeField(65537)
    rng = np.random.default_rng(12)
    target = effective_chunk_prob(0.01, 1, 10)
    frac = 0.0
    reps = 10
    for _ in range(reps):
        cache = place_coded(t, p, 1, 10, f, rng)
        assert cache.chunk_file.shape == (2025, 10)
        frac += float((cache.chunk_file == 1).any(axis=1).mean())
    assert abs(frac / reps - target) <= 0.05 * target


def _check_coverage_repair() -> None:
    t = Topology(3)
    p = make_profile(9, 3.0)
    rng = np.random.default_rng(5)
    cache = place_uncoded(t, p, 1, rng)
    fixed = ensure_coverage(cache, rng)
    present = {int(v) for v in fixed.files.reshape(-1)}
    assert present == set(range(1, 10))
    missing_before = 9 - len({int(v) for v in cache.files.reshape(-1)})
    assert int((fixed.files != cache.files).sum()) == missing_before


def _check_ledger_conservation() -> None:
    t = Topology(7)
    p = make_profile(5, 0.5)
    f = PrimeField(65537)
    rng = np.random.default_rng(40)
    cache = ensure_coverage(place_coded(t, p, 1, 4, f, rng), rng)
    trace = generate_trace(t, p, t.n, rng)
    ledger = deliver_coded(t, cache, trace, f, rng)
    assert not ledger.failures
    rep = compute_metrics(ledger, t.n)
    expected = rep.served_requests + rep.extra_chunks / 4
    assert abs(rep.load_vector.sum() - expected) < 1e-9

    cache_u = ensure_coverage(place_uncoded(t, p, 1, rng), rng)
    led_u = deliver_nearest_replica(t, cache_u, trace, rng)
    assert not led_u.failures
    rep_u = compute_metrics(led_u, t.n)
    mean_dist = float(led_u.distance.sum()) / led_u.m_requests
    assert abs(rep_u.comm_cost - mean_dist) < 1e-9


def _check_order_independence() -> None:
    t = Topology(4)
    p = make_profile(6, 0.5)
    rng = np.random.default_rng(3)
    cache = place_uncoded(t, p, 2, rng)
    files = np.array([3, 1, 4, 2, 6, 5])
    origins = np.array([0, 5, 10, 15, 7, 2])
    perm = np.array([4, 2, 0, 5, 1, 3])
    led_a = deliver_nearest_replica(
        t, cache, RequestTrace(origins, files), np.random.default_rng(8)
    )
    led_b = deliver_nearest_replica(
        t, cache, RequestTrace(origins[perm], files[perm]), np.random.default_rng(8)
    )
    by_a = {r.request_index: (r.server, r.distance) for r in led_a.records}
    by_b = {r.request_index: (r.server, r.distance) for r in led_b.records}
    for new_pos, old_pos in enumerate(perm.tolist()):
        assert by_a.get(old_pos) == by_b.get(new_pos)


def _check_trial_determinism() -> None:
    point = PointConfig(n=25, k=5, m_cache=1, ell=2, gamma=0.5, strategy="coded")
    assert run_trial(point, 2, 99) == run_trial(point, 2, 99)
    cfg = ExperimentConfig(strategy="coded", n=25, k=5, ell=2, trials=3, master_seed=99)
    with tempfile.TemporaryDirectory() as tmp:
        a = Path(tmp) / "a.csv"
        b = Path(tmp) / "b.csv"
        run_experiment(cfg, a, None, workers=1)
        run_experiment(cfg, b, None, workers=1)
        assert a.read_bytes() == b.read_bytes()


CHECKS = (
    ("torus ball identity", _check_ball_identity),
    ("grid metric axioms", _check_metric_axioms),
    ("zipf profile values", _check_zipf_profile),
    ("popularity tail sums", _check_popularity_sandwich),
    ("prime field axioms", _check_field_axioms),
    ("full-rank probability", _check_full_rank_rates),
    ("code round-trip", _check_code_round_trip),
    ("placement statistics", _check_placement_statistics),
    ("coverage repair", _check_coverage_repair),
    ("ledger conservation", _check_ledger_conservation),
    ("order independence", _check_order_independence),
    ("trial determinism", _check_trial_determinism),
)


def run_validation(stream=None) -> int:
    """Run every check; print one line each; return the failure count."""
    stream = stream or sys.stdout
    failures = 0
    for name, fn in CHECKS:
        try:
            fn()
        except Exception as exc:  # report and keep going
            failures += 1
            print(f"FAIL {name}: {exc!r}", file=stream)
        else:
            print(f"ok   {name}", file=stream)
    if failures:
        print(f"{failures} of {len(CHECKS)} checks failed", file=stream)
    else:
        print(f"all {len(CHECKS)} checks passed", file=stream)
    return failures
