"""Cache placement: iid sampled content per node, plus coverage repair.

Three schemes share one CacheState container backed by flat integer arrays
(one row per node). Entries are sampled independently from the popularity
profile, so duplicates within a node are allowed by design.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from codedlb.fieldcode import CodedChunk, PrimeField, _VECTOR_Q_LIMIT
from codedlb.popularity import PopularityProfile, sample_files
from codedlb.topology import Topology

SCHEMES = ("uncoded", "coded", "uncoded-chunks")


class InfeasibleError(Exception):
    """Full coverage cannot be reached with the given capacity."""


@dataclass(frozen=True)
class WholeFile:
    file: int


@dataclass(frozen=True)
class IndexedChunk:
    file: int
    index: int


@dataclass(eq=False)
class CacheState:
    """Network-wide cache contents for one placement.

    uncoded:        files (n, m_cache), whole-file replicas.
    coded:          chunk_file (n, m_cache*ell) + chunk_coeffs (..., ell).
    uncoded-chunks: chunk_file + chunk_index (values 1..ell).
    """

    scheme: str
    n: int
    k: int
    m_cache: int
    ell: int
    q: Optional[int] = None
    files: Optional[np.ndarray] = None
    chunk_file: Optional[np.ndarray] = None
    chunk_coeffs: Optional[np.ndarray] = None
    chunk_index: Optional[np.ndarray] = None
    _order: Optional[np.ndarray] = field(default=None, repr=False, init=False)
    _bounds: Optional[np.ndarray] = field(default=None, repr=False, init=False)
    _holder_cache: dict = field(default_factory=dict, repr=False, init=False)

    @property
    def slots_per_node(self) -> int:
        return self.m_cache if self.scheme == "uncoded" else self.m_cache * self.ell

    def _flat(self) -> np.ndarray:
        arr = self.files if self.scheme == "uncoded" else self.chunk_file
        return arr.reshape(-1)

    def _ensure_index(self) -> None:
        if self._order is not None:
            return
        flat = self._flat()
        order = np.argsort(flat, kind="stable")
        self._bounds = np.searchsorted(flat[order], np.arange(1, self.k + 2))
        self._order = order

    def chunk_holders(self, file: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(unique holder nodes, per-node entry counts, flat entry positions).

        Positions are node-major and slot-ascending, i.e. cached order; the
        counts array lines up with the sorted unique node array.
        """
        if not 1 <= file <= self.k:
            raise ValueError(f"file id must be in [1, {self.k}], got {file}")
        cached = self._holder_cache.get(file)
        if cached is not None:
            return cached
        self._ensure_index()
        lo = self._bounds[file - 1]
        hi = self._bounds[file]
        positions = np.sort(self._order[lo:hi])
        nodes, counts = np.unique(positions // self.slots_per_node, return_counts=True)
        out = (nodes, counts, positions)
        self._holder_cache[file] = out
        return out

    def replica_holders(self, file: int) -> np.ndarray:
        """Sorted unique nodes holding at least one entry of the file."""
        return self.chunk_holders(file)[0]

    def entries(self, node: int) -> list:
        if self.scheme == "uncoded":
            return [WholeFile(int(f)) for f in self.files[node]]
        if self.scheme == "coded":
            return [
                CodedChunk(file=int(f), coeffs=self.chunk_coeffs[node, s].copy(), payload=None)
                for s, f in enumerate(self.chunk_file[node])
            ]
        return [
            IndexedChunk(int(f), int(i))
            for f, i in zip(self.chunk_file[node], self.chunk_index[node])
        ]


def _validate_args(m_cache: int, ell: int) -> None:
    if m_cache < 1:
        raise ValueError(f"cache size must be >= 1, got {m_cache}")
    if ell < 1:
        raise ValueError(f"ell must be >= 1, got {ell}")


def place_uncoded(
    t: Topology, profile: PopularityProfile, m_cache: int, rng: np.random.Generator
) -> CacheState:
    """m_cache whole-file replicas per node, iid from the profile."""
    _validate_args(m_cache, 1)
    files = sample_files(profile, t.n * m_cache, rng).astype(np.int32).reshape(t.n, m_cache)
    return CacheState(scheme="uncoded", n=t.n, k=profile.k, m_cache=m_cache, ell=1, files=files)


def place_coded(
    t: Topology,
    profile: PopularityProfile,
    m_cache: int,
    ell: int,
    fieldq: PrimeField,
    rng: np.random.Generator,
) -> CacheState:
    """m_cache*ell coded chunks per node: file iid from the profile, fresh
    iid uniform coefficient vector each (symbolic payloads)."""
    _validate_args(m_cache, ell)
    if fieldq.q >= _VECTOR_Q_LIMIT:
        raise ValueError(f"vectorized placement needs q < 2^31, got {fieldq.q}")
    slots = m_cache * ell
    chunk_file = sample_files(profile, t.n * slots, rng).astype(np.int32).reshape(t.n, slots)
    coeffs = fieldq.uniform(rng, (t.n, slots, ell)).astype(np.int32)
    return CacheState(
        scheme="coded",
        n=t.n,
        k=profile.k,
        m_cache=m_cache,
        ell=ell,
        q=fieldq.q,
        chunk_file=chunk_file,
        chunk_coeffs=coeffs,
    )


def place_uncoded_chunks(
    t: Topology, profile: PopularityProfile, m_cache: int, ell: int, rng: np.random.Generator
) -> CacheState:
    """m_cache*ell plain chunks per node: (file iid from profile, index
    uniform on 1..ell), both independent per slot."""
    _validate_args(m_cache, ell)
    slots = m_cache * ell
    chunk_file = sample_files(profile, t.n * slots, rng).astype(np.int32).reshape(t.n, slots)
    chunk_index = rng.integers(1, ell + 1, size=(t.n, slots), dtype=np.int32)
    return CacheState(
        scheme="uncoded-chunks",
        n=t.n,
        k=profile.k,
        m_cache=m_cache,
        ell=ell,
        chunk_file=chunk_file,
        chunk_index=chunk_index,
    )


def _pick_victim(flat_unit: np.ndarray, counts: np.ndarray, rng: np.random.Generator) -> int:
    """Uniform entry among entries of the maximally replicated unit(s)."""
    maxc = counts.max()
    pool_units = np.flatnonzero(counts == maxc)
    candidates = np.flatnonzero(np.isin(flat_unit, pool_units))
    return int(candidates[rng.integers(0, candidates.size)])


def ensure_coverage(cache: CacheState, rng: np.random.Generator) -> CacheState:
    """Minimally replace entries so every file (or every (file, index) pair)
    exists somewhere in the network. Victims are drawn uniformly among the
    entries of the most-replicated files/pairs, which can never re-break
    coverage. Returns the input unchanged when already covered."""
    if cache.n * cache.m_cache < cache.k:
        raise InfeasibleError(
            f"coverage needs n*m_cache >= k: {cache.n}*{cache.m_cache} < {cache.k}"
        )
    if cache.scheme == "uncoded":
        flat = cache.files.reshape(-1)
        counts = np.bincount(flat, minlength=cache.k + 1)[1:]
        missing = list(np.flatnonzero(counts == 0))
        if not missing:
            return cache
        flat = flat.copy()
        for f0 in missing:
            victim = _pick_victim(flat - 1, counts, rng)
            counts[flat[victim] - 1] -= 1
            flat[victim] = f0 + 1
            counts[f0] += 1
        out = CacheState(
            scheme="uncoded", n=cache.n, k=cache.k, m_cache=cache.m_cache, ell=1,
            files=flat.reshape(cache.files.shape),
        )
        return out

    if cache.scheme == "coded":
        flat = cache.chunk_file.reshape(-1)
        counts = np.bincount(flat, minlength=cache.k + 1)[1:]
        if (counts >= cache.ell).all():
            return cache
        flat = flat.copy()
        coeffs = cache.chunk_coeffs.reshape(-1, cache.ell).copy()
        for f0 in np.flatnonzero(counts < cache.ell):
            while counts[f0] < cache.ell:
                victim = _pick_victim(flat - 1, counts, rng)
                counts[flat[victim] - 1] -= 1
                flat[victim] = f0 + 1
                coeffs[victim] = rng.integers(0, cache.q, size=cache.ell, dtype=np.int32)
                counts[f0] += 1
        return CacheState(
            scheme="coded", n=cache.n, k=cache.k, m_cache=cache.m_cache, ell=cache.ell,
            q=cache.q,
            chunk_file=flat.reshape(cache.chunk_file.shape),
            chunk_coeffs=coeffs.reshape(cache.chunk_coeffs.shape),
        )

    if cache.scheme == "uncoded-chunks":
        flat_f = cache.chunk_file.reshape(-1)
        flat_i = cache.chunk_index.reshape(-1)
        pair = (flat_f.astype(np.int64) - 1) * cache.ell + (flat_i - 1)
        counts = np.bincount(pair, minlength=cache.k * cache.ell)
        missing = list(np.flatnonzero(counts == 0))
        if not missing:
            return cache
        flat_f = flat_f.copy()
        flat_i = flat_i.copy()
        pair = pair.copy()
        for p0 in missing:
            victim = _pick_victim(pair, counts, rng)
            counts[pair[victim]] -= 1
            pair[victim] = p0
            flat_f[victim] = p0 // cache.ell + 1
            flat_i[victim] = p0 % cache.ell + 1
            counts[p0] += 1
        return CacheState(
            scheme="uncoded-chunks", n=cache.n, k=cache.k, m_cache=cache.m_cache,
            ell=cache.ell,
            chunk_file=flat_f.reshape(cache.chunk_file.shape),
            chunk_index=flat_i.reshape(cache.chunk_index.shape),
        )

    raise ValueError(f"unknown scheme {cache.scheme!r}")
