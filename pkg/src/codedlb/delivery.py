"""Request delivery strategies over a cached network.

Four ways to serve a trace of (origin, file) requests from the caches:
nearest whole-file replica, coded chunks (nearest-first until the
coefficient matrix has full rank), plain indexed chunks (nearest-first
until all distinct indices are seen), and a two-choice variant that
picks the less loaded of two nearby replicas.

All strategies walk outward by grid distance and break distance ties
uniformly at random.  Every fetched message is logged with its server,
origin, payload size as a fraction of one file, and travel distance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Optional

import numpy as np

from codedlb.fieldcode import PrimeField, RankBasis, rank_many
from codedlb.placement import CacheState
from codedlb.popularity import PopularityProfile, sample_files
from codedlb.topology import Topology

UNSERVABLE = "unservable"
UNDECODABLE = "undecodable"


@dataclass(frozen=True, eq=False)
class RequestTrace:
    """Parallel arrays of request origins (node ids) and file ids."""

    origins: np.ndarray
    files: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "origins", np.asarray(self.origins, dtype=np.int64))
        object.__setattr__(self, "files", np.asarray(self.files, dtype=np.int64))
        if self.origins.shape != self.files.shape or self.origins.ndim != 1:
            raise ValueError("origins and files must be 1-d arrays of equal length")

    @property
    def m(self) -> int:
        return int(self.origins.size)

    def requests(self) -> Iterator[tuple[int, int]]:
        for o, f in zip(self.origins.tolist(), self.files.tolist()):
            yield o, f


def generate_trace(
    t: Topology, profile: PopularityProfile, m: int, rng: np.random.Generator
) -> RequestTrace:
    """m requests: origin uniform over nodes, file iid from the profile."""
    origins = rng.integers(0, t.n, size=m, dtype=np.int64)
    files = sample_files(profile, m, rng)
    return RequestTrace(origins, files)


class MessageRecord(NamedTuple):
    server: int
    origin: int
    request_index: int
    bits_fraction: float
    distance: int


@dataclass(eq=False)
class DeliveryLedger:
    """Columnar log of every message sent while serving one trace.

    Rows are sorted by request index; within a request they keep fetch
    order.  chunk_pos holds the flat cache slot a chunk came from (-1
    for whole-file messages).  failures lists (request index, reason).
    """

    m_requests: int
    server: np.ndarray
    origin: np.ndarray
    request_index: np.ndarray
    bits_fraction: np.ndarray
    distance: np.ndarray
    chunk_pos: np.ndarray
    failures: list[tuple[int, str]] = field(default_factory=list)
    extra_chunks: int = 0
    scanned_chunks: int = 0

    def __len__(self) -> int:
        return int(self.server.size)

    @property
    def records(self) -> list[MessageRecord]:
        cols = zip(
            self.server.tolist(),
            self.origin.tolist(),
            self.request_index.tolist(),
            self.bits_fraction.tolist(),
            self.distance.tolist(),
        )
        return [MessageRecord(*c) for c in cols]


class _LedgerBuilder:
    """Accumulates batch and scalar rows, then sorts by request index.

    Batch rows are emitted before scalar rows for the same request, which
    matches fetch order: the vectorized pass runs first, per-request
    repair fetches after.
    """

    def __init__(self, m_requests: int):
        self.m_requests = m_requests
        self._batches: list[tuple[np.ndarray, ...]] = []
        self._server: list[int] = []
        self._origin: list[int] = []
        self._req: list[int] = []
        self._bits: list[float] = []
        self._dist: list[int] = []
        self._pos: list[int] = []
        self.failures: list[tuple[int, str]] = []
        self.extra_chunks = 0
        self.scanned_chunks = 0

    def add_batch(self, server, origin, request_index, bits, distance, chunk_pos=None):
        server = np.asarray(server, dtype=np.int64)
        if server.size == 0:
            return
        if chunk_pos is None:
            chunk_pos = np.full(server.size, -1, dtype=np.int64)
        self._batches.append(
            (
                server,
                np.asarray(origin, dtype=np.int64),
                np.asarray(request_index, dtype=np.int64),
                np.asarray(bits, dtype=np.float64),
                np.asarray(distance, dtype=np.int64),
                np.asarray(chunk_pos, dtype=np.int64),
            )
        )

    def add(self, server: int, origin: int, request_index: int, bits: float,
            distance: int, chunk_pos: int = -1) -> None:
        self._server.append(server)
        self._origin.append(origin)
        self._req.append(request_index)
        self._bits.append(bits)
        self._dist.append(distance)
        self._pos.append(chunk_pos)

    def fail(self, request_index: int, reason: str) -> None:
        self.failures.append((int(request_index), reason))

    def build(self) -> DeliveryLedger:
        scalar = (
            np.array(self._server, dtype=np.int64),
            np.array(self._origin, dtype=np.int64),
            np.array(self._req, dtype=np.int64),
            np.array(self._bits, dtype=np.float64),
            np.array(self._dist, dtype=np.int64),
            np.array(self._pos, dtype=np.int64),
        )
        parts = self._batches + [scalar]
        cols = [np.concatenate([p[i] for p in parts]) for i in range(6)]
        order = np.argsort(cols[2], kind="stable")
        cols = [c[order] for c in cols]
        return DeliveryLedger(
            m_requests=self.m_requests,
            server=cols[0],
            origin=cols[1],
            request_index=cols[2],
            bits_fraction=cols[3],
            distance=cols[4],
            chunk_pos=cols[5],
            failures=sorted(self.failures),
            extra_chunks=self.extra_chunks,
            scanned_chunks=self.scanned_chunks,
        )


def _require_scheme(cache: CacheState, scheme: str) -> None:
    if cache.scheme != scheme:
        raise ValueError(f"needs a {scheme!r} placement, got {cache.scheme!r}")


def _file_groups(files: np.ndarray) -> Iterator[tuple[int, np.ndarray]]:
    """Yield (file, trace positions) per requested file, positions ascending."""
    if files.size == 0:
        return
    order = np.argsort(files, kind="stable")
    svals = files[order]
    cuts = np.flatnonzero(np.diff(svals)) + 1
    starts = np.concatenate(([0], cuts))
    ends = np.concatenate((cuts, [files.size]))
    for s, e in zip(starts, ends):
        yield int(svals[s]), order[s:e]


def _walk_keys(
    t: Topology, origins: np.ndarray, nodes: np.ndarray, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Distances plus a random walk order over holder nodes per request.

    Adding U(0,1) jitter to integer distances and sorting gives each
    request an independent uniform shuffle within every distance shell.
    """
    d = t.distance_matrix(origins, nodes)
    order = np.argsort(d + rng.random(d.shape), axis=1)
    return d, order


def deliver_nearest_replica(
    t: Topology, cache: CacheState, trace: RequestTrace, rng: np.random.Generator
) -> DeliveryLedger:
    """Serve each request from the closest whole-file replica."""
    _require_scheme(cache, "uncoded")
    b = _LedgerBuilder(trace.m)
    for f, req in _file_groups(trace.files):
        holders = cache.replica_holders(f)
        if holders.size == 0:
            for i in req.tolist():
                b.fail(i, UNSERVABLE)
            continue
        origins = trace.origins[req]
        d = t.distance_matrix(origins, holders)
        col = np.argmin(d + rng.random(d.shape), axis=1)
        rows = np.arange(req.size)
        b.add_batch(holders[col], origins, req, np.ones(req.size), d[rows, col])
    return b.build()


class _GroupWalk(NamedTuple):
    """Per-file walk state kept around for the scalar walk paths."""

    req: np.ndarray
    origins: np.ndarray
    d: np.ndarray
    order: np.ndarray
    nodes: np.ndarray
    counts: np.ndarray
    pos: np.ndarray
    block_start: np.ndarray


def deliver_coded(
    t: Topology,
    cache: CacheState,
    trace: RequestTrace,
    fieldq: PrimeField,
    rng: np.random.Generator,
) -> DeliveryLedger:
    """Fetch one coded chunk from each of the ell nearest holder nodes.

    The fast path takes the first cached chunk of each of the ell closest
    holders; the coefficient matrices are rank-checked in one batch over
    the whole trace.  When a request cannot stop there -- fewer than ell
    holder nodes, or a rank-deficient draw -- it keeps walking in
    round-robin priority (every holder's first chunk before any holder's
    second), fetching one chunk at a time until its basis is full or the
    network is exhausted.  Chunks fetched beyond ell count as extras.
    """
    _require_scheme(cache, "coded")
    if fieldq.q != cache.q:
        raise ValueError(f"field order {fieldq.q} != placement field order {cache.q}")
    ell = cache.ell
    spn = cache.slots_per_node
    coeff_flat = cache.chunk_coeffs.reshape(-1, ell)
    b = _LedgerBuilder(trace.m)
    mats_parts: list[np.ndarray] = []
    walks: list[_GroupWalk] = []
    for f, req in _file_groups(trace.files):
        nodes, counts, pos = cache.chunk_holders(f)
        if nodes.size == 0:
            for i in req.tolist():
                b.fail(i, UNSERVABLE)
            continue
        origins = trace.origins[req]
        d, order = _walk_keys(t, origins, nodes, rng)
        block_start = np.concatenate(([0], np.cumsum(counts)))
        walk = _GroupWalk(req, origins, d, order, nodes, counts, pos, block_start)
        if nodes.size < ell:
            # not enough distinct holders: the whole group walks chunk by chunk
            for r in range(req.size):
                _walk_until_decodable(b, fieldq, ell, coeff_flat, walk, r, None)
            continue
        node_col = order[:, :ell]
        picked_pos = pos[block_start[node_col]]
        b.add_batch(
            picked_pos.ravel() // spn,
            np.repeat(origins, ell),
            np.repeat(req, ell),
            np.full(req.size * ell, 1.0 / ell),
            np.take_along_axis(d, node_col, axis=1).ravel(),
            picked_pos.ravel(),
        )
        mats_parts.append(coeff_flat[picked_pos.ravel()].astype(np.int64).reshape(req.size, ell, ell))
        walks.append(walk)
    if mats_parts:
        mats = np.concatenate(mats_parts) if len(mats_parts) > 1 else mats_parts[0]
        ranks = rank_many(mats, fieldq.q)
        offset = 0
        for part, walk in zip(mats_parts, walks):
            for r in np.flatnonzero(ranks[offset : offset + part.shape[0]] < ell).tolist():
                _walk_until_decodable(b, fieldq, ell, coeff_flat, walk, r, part[r])
            offset += part.shape[0]
    return b.build()


def _round_robin_chunks(walk: _GroupWalk, r: int) -> Iterator[tuple[int, int]]:
    """Request r's chunk priority: pass p visits every holder with > p
    chunks in walk order before pass p+1 starts."""
    row = walk.order[r]
    for p in range(int(walk.counts.max())):
        for ncol in row.tolist():
            if walk.counts[ncol] > p:
                yield ncol, int(walk.pos[walk.block_start[ncol] + p])


def _walk_until_decodable(
    b: _LedgerBuilder,
    fieldq: PrimeField,
    ell: int,
    coeff_flat: np.ndarray,
    walk: _GroupWalk,
    r: int,
    prefetched,
) -> None:
    """Fetch chunks for request r in priority order until rank ell.

    With `prefetched` rows the fast path already took the first ell
    chunks (one per holder), so the walk resumes after them and every
    further fetch is an extra; without, it starts from scratch.
    """
    basis = RankBasis(fieldq, ell)
    fetched = 0
    if prefetched is not None:
        for row in prefetched:
            basis.add(row)
        fetched = ell
    origin = int(walk.origins[r])
    req_index = int(walk.req[r])
    for k, (ncol, p) in enumerate(_round_robin_chunks(walk, r)):
        if prefetched is not None and k < ell:
            continue
        b.add(int(walk.nodes[ncol]), origin, req_index, 1.0 / ell, int(walk.d[r, ncol]), p)
        fetched += 1
        if fetched > ell:
            b.extra_chunks += 1
        if basis.add(coeff_flat[p]) and basis.rank == ell:
            return
    b.fail(req_index, UNDECODABLE)


def deliver_uncoded_chunks(
    t: Topology, cache: CacheState, trace: RequestTrace, rng: np.random.Generator
) -> DeliveryLedger:
    """Scan chunks nearest-first, fetching the first copy of each index.

    Duplicate indices are scanned and skipped without a message; the
    scanned total is tallied on the ledger.  A request that exhausts the
    network before seeing all ell indices fails but keeps what it got.
    """
    _require_scheme(cache, "uncoded-chunks")
    ell = cache.ell
    idx_flat = cache.chunk_index.reshape(-1)
    b = _LedgerBuilder(trace.m)
    for f, req in _file_groups(trace.files):
        nodes, counts, pos = cache.chunk_holders(f)
        if nodes.size == 0:
            for i in req.tolist():
                b.fail(i, UNSERVABLE)
            continue
        origins = trace.origins[req]
        d, order = _walk_keys(t, origins, nodes, rng)
        block_start = np.concatenate(([0], np.cumsum(counts)))
        for r in range(req.size):
            o = int(origins[r])
            ridx = int(req[r])
            seen: set[int] = set()
            for ncol in order[r].tolist():
                node = int(nodes[ncol])
                dist = int(d[r, ncol])
                for p in pos[block_start[ncol] : block_start[ncol + 1]].tolist():
                    b.scanned_chunks += 1
                    idx = int(idx_flat[p])
                    if idx in seen:
                        continue
                    seen.add(idx)
                    b.add(node, o, ridx, 1.0 / ell, dist, p)
                    if len(seen) == ell:
                        break
                if len(seen) == ell:
                    break
            if len(seen) < ell:
                b.fail(ridx, UNSERVABLE)
    return b.build()


def deliver_two_choice(
    t: Topology,
    cache: CacheState,
    trace: RequestTrace,
    radius_policy: str = "expanding-ring",
    rng: Optional[np.random.Generator] = None,
) -> DeliveryLedger:
    """Pick two replicas from the smallest radius holding at least two,
    then serve from the one with the lower running load (ties by coin).

    Requests are processed in trace order; load counts messages already
    assigned during this same call.  A lone replica serves directly.
    """
    if radius_policy != "expanding-ring":
        raise ValueError(f"unknown radius policy {radius_policy!r}")
    _require_scheme(cache, "uncoded")
    b = _LedgerBuilder(trace.m)
    loads = np.zeros(t.n)
    w = t.width
    holder_coords: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}
    for i in range(trace.m):
        o = int(trace.origins[i])
        f = int(trace.files[i])
        cached = holder_coords.get(f)
        if cached is None:
            h = cache.replica_holders(f)
            cached = (h, h // w, h % w)
            holder_coords[f] = cached
        holders, hrow, hcol = cached
        if holders.size == 0:
            b.fail(i, UNSERVABLE)
            continue
        dr = np.abs(hrow - o // w)
        dc = np.abs(hcol - o % w)
        if t.wrap:
            dr = np.minimum(dr, w - dr)
            dc = np.minimum(dc, w - dc)
        d = dr + dc
        if holders.size == 1:
            pick = 0
        else:
            radius = np.partition(d, 1)[1]
            cand = np.flatnonzero(d <= radius)
            a = int(rng.integers(cand.size))
            c = int(rng.integers(cand.size - 1))
            if c >= a:
                c += 1
            ia, ib = int(cand[a]), int(cand[c])
            la, lb = loads[holders[ia]], loads[holders[ib]]
            if la == lb:
                pick = ia if rng.random() < 0.5 else ib
            else:
                pick = ia if la < lb else ib
        server = int(holders[pick])
        loads[server] += 1.0
        b.add(server, o, i, 1.0, int(d[pick]))
    return b.build()
