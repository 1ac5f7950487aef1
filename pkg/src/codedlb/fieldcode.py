"""Prime-field arithmetic and random linear coding over file chunks.

Files are split into ell chunks of field symbols; a coded chunk is a random
linear combination of all ell chunks with iid uniform coefficients. During
simulation only the coefficient vectors matter (payload=None, "symbolic"
mode); payload mode exists so tests can verify that symbolic rank bookkeeping
is faithful to actual decodability.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

# int64 products a*b with a,b < q stay exact below this bound
_VECTOR_Q_LIMIT = 2**31


class RankDeficientError(Exception):
    """Collected coefficient vectors do not span the full chunk space."""


_MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, exact for n < 2^64."""
    if n < 2:
        return False
    for p in _MR_WITNESSES:
        if n == p:
            return True
        if n % p == 0:
            return False
    d = n - 1
    s = 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_WITNESSES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


@dataclass(frozen=True)
class PrimeField:
    """F_q for prime q < 2^64. Scalar ops take and return Python ints."""

    q: int

    def __post_init__(self) -> None:
        if not 2 <= self.q < 2**64:
            raise ValueError(f"q must be a prime in [2, 2^64), got {self.q}")
        if not is_prime(self.q):
            raise ValueError(f"q must be prime, got {self.q}")

    def add(self, a: int, b: int) -> int:
        return (a + b) % self.q

    def sub(self, a: int, b: int) -> int:
        return (a - b) % self.q

    def mul(self, a: int, b: int) -> int:
        return (a * b) % self.q

    def neg(self, a: int) -> int:
        return -a % self.q

    def inv(self, a: int) -> int:
        a %= self.q
        if a == 0:
            raise ZeroDivisionError("0 has no inverse")
        return pow(a, self.q - 2, self.q)

    def uniform(self, rng: np.random.Generator, size) -> np.ndarray:
        """iid uniform field elements; vectorized, so q must fit int64."""
        if self.q >= 2**63:
            raise ValueError("vectorized draws need q < 2^63")
        return rng.integers(0, self.q, size=size, dtype=np.int64)

    def _work_dtype(self):
        # object dtype falls back to exact Python ints for huge q
        return np.int64 if self.q < _VECTOR_Q_LIMIT else object


@dataclass(frozen=True, eq=False)
class ChunkedFile:
    """A file as an (ell, symbols_per_chunk) matrix of field symbols.

    original_len is the byte length before padding when the file came from
    split_file; None for symbol-level constructions.
    """

    file: int
    ell: int
    chunks: np.ndarray
    original_len: int | None


@dataclass(frozen=True, eq=False)
class CodedChunk:
    file: int
    coeffs: np.ndarray
    payload: np.ndarray | None  # None = symbolic


def _symbol_width(q: int) -> int:
    return (q.bit_length() - 1) // 8


def split_file(payload: bytes, ell: int, field: PrimeField, file: int = 1) -> ChunkedFile:
    """Pack bytes into field symbols and cut them into ell equal chunks."""
    if ell < 1:
        raise ValueError(f"ell must be >= 1, got {ell}")
    width = _symbol_width(field.q)
    if width < 1:
        raise ValueError(f"byte packing needs q >= 257, got q={field.q}")
    nsym = -(-len(payload) // width) if payload else 0
    per_chunk = -(-nsym // ell) if nsym else 0
    padded = payload + b"\x00" * (ell * per_chunk * width - len(payload))
    raw = np.frombuffer(padded, dtype=np.uint8).reshape(-1, width).astype(np.int64)
    powers = 256 ** np.arange(width - 1, -1, -1, dtype=np.int64)
    symbols = raw @ powers
    return ChunkedFile(file=file, ell=ell, chunks=symbols.reshape(ell, per_chunk), original_len=len(payload))


def encode_chunk(
    cf: ChunkedFile,
    field: PrimeField,
    rng: np.random.Generator | None = None,
    coeffs: np.ndarray | None = None,
) -> CodedChunk:
    """One coded chunk: sum_r coeffs[r] * chunk_r over F_q.

    Coefficients are drawn iid uniform from rng unless forced via coeffs;
    every call draws fresh, so repeated encodings are independent.
    """
    if coeffs is None:
        if rng is None:
            raise ValueError("need rng or explicit coeffs")
        coeffs = field.uniform(rng, cf.ell)
    coeffs = np.asarray(coeffs, dtype=np.int64)
    if coeffs.shape != (cf.ell,):
        raise ValueError(f"coeffs must have shape ({cf.ell},)")
    if coeffs.min() < 0 or int(coeffs.max()) >= field.q:
        raise ValueError("coeffs out of field range")
    dtype = field._work_dtype()
    chunks = cf.chunks.astype(dtype, copy=False)
    payload = (coeffs.astype(dtype) @ chunks) % field.q
    return CodedChunk(file=cf.file, coeffs=coeffs, payload=np.asarray(payload))


class RankBasis:
    """Incremental row basis over F_q; add() reports whether rank grew."""

    def __init__(self, field: PrimeField, ell: int):
        self.field = field
        self.ell = ell
        self._pivots: list[tuple[int, np.ndarray]] = []

    def add(self, vec) -> bool:
        q = self.field.q
        v = np.asarray(vec).astype(self.field._work_dtype()) % q
        if v.shape != (self.ell,):
            raise ValueError(f"vector must have length {self.ell}")
        for col, row in self._pivots:
            c = v[col]
            if c:
                v = (v - c * row) % q
        nonzero = np.flatnonzero(v)
        if nonzero.size == 0:
            return False
        col = int(nonzero[0])
        v = (v * self.field.inv(int(v[col]))) % q
        self._pivots.append((col, v))
        return True

    @property
    def rank(self) -> int:
        return len(self._pivots)


def rank(vectors: Sequence, field: PrimeField) -> int:
    """Rank of the given coefficient vectors over F_q."""
    vectors = list(vectors)
    if not vectors:
        return 0
    basis = RankBasis(field, len(np.asarray(vectors[0]).ravel()))
    for v in vectors:
        basis.add(np.asarray(v).ravel())
    return basis.rank


def _inv_many(vals: np.ndarray, q: int) -> np.ndarray:
    """Vectorized a^(q-2) mod q by square-and-multiply; q < 2^31."""
    result = np.ones_like(vals)
    base = vals % q
    e = q - 2
    while e:
        if e & 1:
            result = (result * base) % q
        base = (base * base) % q
        e >>= 1
    return result


def rank_many(mats: np.ndarray, q: int) -> np.ndarray:
    """Ranks of a batch of matrices over F_q. mats shape (B, m, l)."""
    if q >= _VECTOR_Q_LIMIT:
        raise ValueError(f"rank_many needs q < 2^31, got {q}")
    a = np.array(mats, dtype=np.int64) % q
    if a.ndim != 3:
        raise ValueError("mats must have shape (batch, rows, cols)")
    nbatch, nrows, ncols = a.shape
    if nbatch == 0:
        return np.zeros(0, dtype=np.int64)
    piv = np.zeros(nbatch, dtype=np.int64)
    rows = np.arange(nrows)
    for col in range(ncols):
        eligible = (rows[None, :] >= piv[:, None]) & (a[:, :, col] != 0)
        has = eligible.any(axis=1)
        if not has.any():
            continue
        sel = np.flatnonzero(has)
        pr = piv[sel]
        pi = np.argmax(eligible[sel], axis=1)
        tmp = a[sel, pr, col:].copy()
        a[sel, pr, col:] = a[sel, pi, col:]
        a[sel, pi, col:] = tmp
        inv = _inv_many(a[sel, pr, col], q)
        a[sel, pr, col:] = (a[sel, pr, col:] * inv[:, None]) % q
        sub = a[sel, :, col:]
        below = rows[None, :] > pr[:, None]
        factor = np.where(below, sub[:, :, 0], 0)
        pivrow = a[sel, pr, col:]
        a[sel, :, col:] = (sub - factor[:, :, None] * pivrow[:, None, :]) % q
        piv[sel] = pr + 1
    return piv


def decode(
    chunks: Sequence[CodedChunk],
    ell: int,
    original_len: int | None,
    field: PrimeField,
    return_symbols: bool = False,
):
    """Invert the coding operator and recover chunk symbols (or bytes).

    Raises RankDeficientError when the coefficient vectors have rank < ell.
    With return_symbols=True the solved (ell, s) symbol matrix is returned;
    otherwise symbols are unpacked to bytes and truncated to original_len.
    """
    if ell < 1:
        raise ValueError(f"ell must be >= 1, got {ell}")
    chunks = list(chunks)
    if len(chunks) < ell:
        raise RankDeficientError(f"need at least {ell} chunks, got {len(chunks)}")
    files = {c.file for c in chunks}
    if len(files) != 1:
        raise ValueError(f"chunks from multiple files: {sorted(files)}")
    if any(c.payload is None for c in chunks):
        raise ValueError("decode needs payload-mode chunks")
    q = field.q
    dtype = field._work_dtype()
    a = np.array([np.asarray(c.coeffs) for c in chunks]).astype(dtype) % q
    p = np.array([np.asarray(c.payload) for c in chunks]).astype(dtype) % q
    if a.shape[1] != ell:
        raise ValueError(f"coefficient vectors must have length {ell}")

    # Gauss-Jordan on [a | p]; full column rank leaves a's top block = I
    r = 0
    nrows = a.shape[0]
    for col in range(ell):
        pivot = next((i for i in range(r, nrows) if a[i, col]), None)
        if pivot is None:
            continue
        if pivot != r:
            a[[r, pivot]] = a[[pivot, r]]
            p[[r, pivot]] = p[[pivot, r]]
        inv = field.inv(int(a[r, col]))
        a[r] = (a[r] * inv) % q
        p[r] = (p[r] * inv) % q
        for i in range(nrows):
            if i != r and a[i, col]:
                f = a[i, col].copy()
                a[i] = (a[i] - f * a[r]) % q
                p[i] = (p[i] - f * p[r]) % q
        r += 1
    if r < ell:
        raise RankDeficientError(f"rank {r} < ell {ell}")
    symbols = np.asarray(p[:ell])
    if return_symbols:
        return symbols
    width = _symbol_width(q)
    if width < 1:
        raise ValueError(f"byte unpacking needs q >= 257, got q={q}")
    if symbols.size and int(np.max(symbols)) >= 256**width:
        raise ValueError("decoded symbols exceed byte-packing range")
    sym = symbols.astype(np.int64).ravel()
    shifts = 8 * np.arange(width - 1, -1, -1, dtype=np.int64)
    raw = ((sym[:, None] >> shifts) & 0xFF).astype(np.uint8).tobytes()
    return raw[: original_len if original_len is not None else len(raw)]


def full_rank_probability(q: int, ell: int) -> float:
    """P(an ell x ell matrix with iid uniform F_q entries is invertible)."""
    out = 1.0
    for i in range(1, ell + 1):
        out *= 1.0 - float(q) ** -i
    return out
