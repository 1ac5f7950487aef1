"""Zipf file popularity: profiles, inverse-CDF sampling, tail sums."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PopularityProfile:
    """Zipf(gamma) popularity over files 1..k.

    probs[i-1] = (1/i^gamma) / sum_j (1/j^gamma); cdf is its running sum with
    the last entry pinned to 1.0 so inverse-CDF sampling never falls off the
    table.
    """

    k: int
    gamma: float
    probs: np.ndarray
    cdf: np.ndarray


def make_profile(k: int, gamma: float) -> PopularityProfile:
    if k < 1:
        raise ValueError(f"library size must be >= 1, got {k}")
    if not math.isfinite(gamma) or gamma < 0:
        raise ValueError(f"gamma must be finite and >= 0, got {gamma}")
    weights = np.arange(1, k + 1, dtype=np.float64) ** -gamma
    z = math.fsum(weights)
    probs = weights / z
    cdf = np.cumsum(probs)
    cdf[-1] = 1.0
    probs.setflags(write=False)
    cdf.setflags(write=False)
    return PopularityProfile(k=k, gamma=gamma, probs=probs, cdf=cdf)


def sample_files(profile: PopularityProfile, size: int, rng: np.random.Generator) -> np.ndarray:
    """File ids (1-based) sampled iid from the profile, via inverse CDF."""
    u = rng.random(size)
    return np.searchsorted(profile.cdf, u, side="right").astype(np.int64) + 1


def sample_file(profile: PopularityProfile, rng: np.random.Generator) -> int:
    return int(sample_files(profile, 1, rng)[0])


def lambda_sum(gamma: float, j: int, k: int) -> float:
    """Tail weight sum_{i=j}^{k} i^-gamma (inclusive at both ends)."""
    if not 1 <= j <= k:
        raise ValueError(f"need 1 <= j <= k, got j={j}, k={k}")
    if not math.isfinite(gamma) or gamma < 0:
        raise ValueError(f"gamma must be finite and >= 0, got {gamma}")
    return math.fsum(float(i) ** -gamma for i in range(j, k + 1))


def effective_chunk_prob(p: float, m_cache: int, ell: int) -> float:
    """P(a node caches >= 1 chunk of a file) from its popularity p.

    With m_cache * ell iid draws per node, that is 1 - (1-p)^(m_cache*ell).
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must be in [0, 1], got {p}")
    if m_cache < 1 or ell < 1:
        raise ValueError("cache size and chunk count must be >= 1")
    return 1.0 - (1.0 - p) ** (m_cache * ell)
