"""Square-lattice cache network: node ids, L1 distances, balls, shell walks.

Nodes live on a width x width lattice in row-major order. With wrap=True the
lattice is a torus and distances wrap around both axes; with wrap=False it is
a bounded grid with plain L1 distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np


@dataclass(frozen=True)
class Topology:
    width: int
    wrap: bool = True

    def __post_init__(self) -> None:
        if self.width < 1:
            raise ValueError(f"width must be >= 1, got {self.width}")

    @classmethod
    def from_nodes(cls, n: int, wrap: bool = True) -> "Topology":
        w = math.isqrt(n)
        if w * w != n:
            raise ValueError(f"node count must be a perfect square, got {n}")
        return cls(w, wrap=wrap)

    @property
    def n(self) -> int:
        return self.width * self.width

    def coords(self, u: int) -> tuple[int, int]:
        return divmod(u, self.width)

    def distance(self, u: int, v: int) -> int:
        w = self.width
        dr = abs(u // w - v // w)
        dc = abs(u % w - v % w)
        if self.wrap:
            dr = min(dr, w - dr)
            dc = min(dc, w - dc)
        return dr + dc

    def distance_matrix(self, us: np.ndarray, vs: np.ndarray) -> np.ndarray:
        """Pairwise distances, shape (len(us), len(vs))."""
        w = self.width
        us = np.asarray(us, dtype=np.int64)
        vs = np.asarray(vs, dtype=np.int64)
        dr = np.abs(us[:, None] // w - vs[None, :] // w)
        dc = np.abs(us[:, None] % w - vs[None, :] % w)
        if self.wrap:
            dr = np.minimum(dr, w - dr)
            dc = np.minimum(dc, w - dc)
        return dr + dc

    def distances_from(self, u: int) -> np.ndarray:
        return self.distance_matrix(np.array([u]), np.arange(self.n))[0]

    def _shell_offsets(self, d: int) -> list[tuple[int, int]]:
        if d == 0:
            return [(0, 0)]
        offsets = []
        for dr in range(-d, d + 1):
            rest = d - abs(dr)
            offsets.append((dr, rest))
            if rest:
                offsets.append((dr, -rest))
        return offsets

    def shell(self, u: int, d: int) -> list[int]:
        """Node ids at exact distance d, ascending.

        Analytic diamond enumeration; valid on the torus only for
        d <= width//2 (beyond that wrapped offsets can land closer).
        """
        w = self.width
        r0, c0 = divmod(u, w)
        if self.wrap:
            if d > w // 2:
                raise ValueError("analytic shell is only valid up to width//2 on the torus")
            nodes = {((r0 + dr) % w) * w + (c0 + dc) % w for dr, dc in self._shell_offsets(d)}
        else:
            nodes = {
                (r0 + dr) * w + (c0 + dc)
                for dr, dc in self._shell_offsets(d)
                if 0 <= r0 + dr < w and 0 <= c0 + dc < w
            }
        return sorted(nodes)

    def ball(self, u: int, r: int) -> set[int]:
        """All nodes within distance r of u (u included)."""
        if r < 0:
            raise ValueError("radius must be >= 0")
        if self.wrap and r > self.width // 2:
            return set(np.flatnonzero(self.distances_from(u) <= r).tolist())
        out: set[int] = set()
        for d in range(min(r, 2 * (self.width - 1)) + 1):
            out.update(self.shell(u, d))
        return out

    def nodes_by_distance(self, u: int, rng: np.random.Generator) -> Iterator[tuple[int, int]]:
        """Yield (node, distance) in nondecreasing distance from u.

        Within one distance shell the order is a uniformly random permutation
        drawn from rng, so repeated walks with fresh generators break ties
        independently.
        """
        dist = self.distances_from(u)
        for d in range(int(dist.max()) + 1):
            members = np.flatnonzero(dist == d)
            if members.size == 0:
                continue
            for v in rng.permutation(members):
                yield int(v), d
