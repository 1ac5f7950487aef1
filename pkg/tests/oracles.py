"""Independent reference implementations used to cross-check the package.

Everything here is deliberately brute-force and structurally different from
the code under test: BFS over explicit adjacency instead of coordinate
arithmetic, span enumeration instead of Gaussian elimination, full scans
instead of shell walks.
"""

from collections import deque
from fractions import Fraction
from itertools import product


def l1_distance(width, wrap, u, v):
    ru, cu = divmod(u, width)
    rv, cv = divmod(v, width)
    dr = abs(ru - rv)
    dc = abs(cu - cv)
    if wrap:
        dr = min(dr, width - dr)
        dc = min(dc, width - dc)
    return dr + dc


def bfs_distances(width, wrap, origin):
    """Hop counts from origin over the 4-neighbor lattice, by explicit BFS."""
    n = width * width
    adj = [[] for _ in range(n)]
    for node in range(n):
        r, c = divmod(node, width)
        for dr, dc in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            rr, cc = r + dr, c + dc
            if wrap:
                rr %= width
                cc %= width
            elif not (0 <= rr < width and 0 <= cc < width):
                continue
            adj[node].append(rr * width + cc)
    dist = [-1] * n
    dist[origin] = 0
    queue = deque([origin])
    while queue:
        x = queue.popleft()
        for y in adj[x]:
            if dist[y] < 0:
                dist[y] = dist[x] + 1
                queue.append(y)
    return dist


def brute_ball(width, wrap, u, r):
    n = width * width
    return {v for v in range(n) if l1_distance(width, wrap, u, v) <= r}


def zipf_probs_exact(k, gamma_int):
    """Exact Zipf probabilities for integer gamma, via Fractions."""
    weights = [Fraction(1, i**gamma_int) for i in range(1, k + 1)]
    z = sum(weights)
    return [w / z for w in weights]


def span_rank(rows, q):
    """Rank as log_q of the span size, by enumerating all linear combos."""
    ell = len(rows[0])
    span = {tuple([0] * ell)}
    for row in rows:
        additions = set()
        for c in range(q):
            scaled = tuple((c * x) % q for x in row)
            for v in span:
                additions.add(tuple((a + b) % q for a, b in zip(v, scaled)))
        span |= additions
    size = len(span)
    rank = 0
    while q**rank < size:
        rank += 1
    assert q**rank == size, "span size is not a power of q"
    return rank


def nearest_replica_distance(width, wrap, origin, holders):
    """Distance to the closest holder, via the BFS oracle."""
    dist = bfs_distances(width, wrap, origin)
    return min(dist[h] for h in holders)


def sorted_chunk_distances(width, wrap, origin, holder_counts, take):
    """First `take` chunk distances under a full sort of every cached chunk.

    holder_counts: mapping node -> number of chunks of the file it holds.
    """
    dists = []
    for node, count in holder_counts.items():
        dists.extend([l1_distance(width, wrap, origin, node)] * count)
    return sorted(dists)[:take]


def round_robin_chunk_distances(width, wrap, origin, holder_counts, take):
    """First `take` chunk distances when each pass over the holders may
    yield one chunk per node: a node's k-th copy ranks behind every
    node's (k-1)-th copy, nearer nodes first within a pass.
    """
    keyed = []
    for node, count in holder_counts.items():
        d = l1_distance(width, wrap, origin, node)
        keyed.extend((k, d) for k in range(count))
    keyed.sort()
    return sorted(d for _, d in keyed[:take])


def harmonic(ell):
    return sum(Fraction(1, i) for i in range(1, ell + 1))


def full_rank_probability_exact(q, ell):
    """P(random ell x ell matrix over F_q is invertible), by enumeration.

    Only feasible for q**(ell*ell) small; used to freeze anchor values.
    """
    total = 0
    full = 0
    for entries in product(range(q), repeat=ell * ell):
        rows = [entries[i * ell : (i + 1) * ell] for i in range(ell)]
        total += 1
        if span_rank(rows, q) == ell:
            full += 1
    return Fraction(full, total)
