import numpy as np
import pytest
from hypothesis import given, strategies as st

from codedlb.fieldcode import (
    ChunkedFile,
    CodedChunk,
    PrimeField,
    RankBasis,
    RankDeficientError,
    decode,
    encode_chunk,
    full_rank_probability,
    is_prime,
    rank,
    rank_many,
    split_file,
)

from oracles import full_rank_probability_exact, span_rank


def test_field_examples():
    f7 = PrimeField(7)
    assert f7.add(3, 5) == 1
    assert f7.inv(3) == 5
    f2 = PrimeField(2)
    assert f2.mul(1, 1) == 1


def test_field_rejects_nonprime_and_small():
    for bad in (0, 1, 4, 6, 9, 65536, 2**64 + 1):
        with pytest.raises(ValueError):
            PrimeField(bad)
    PrimeField(65537)
    PrimeField(2)


def test_is_prime_spot_values():
    assert is_prime(2) and is_prime(3) and is_prime(65537)
    assert is_prime(2**61 - 1)  # Mersenne prime
    assert not is_prime(1) and not is_prime(561) and not is_prime(2**61 + 1)


def test_field_axioms_exhaustive_q7():
    f = PrimeField(7)
    for a in range(7):
        for b in range(7):
            assert f.add(a, b) == (a + b) % 7
            assert f.mul(a, b) == (a * b) % 7
            assert f.sub(a, b) == (a - b) % 7
            for c in range(7):
                assert f.mul(a, f.add(b, c)) == f.add(f.mul(a, b), f.mul(a, c))
        if a:
            assert f.mul(a, f.inv(a)) == 1
        assert f.add(a, f.neg(a)) == 0


def test_inv_zero_raises():
    with pytest.raises(ZeroDivisionError):
        PrimeField(7).inv(0)
    with pytest.raises(ZeroDivisionError):
        PrimeField(65537).inv(0)


@given(a=st.integers(0, 65536), b=st.integers(0, 65536))
def test_field_axioms_q65537(a, b):
    f = PrimeField(65537)
    assert f.add(a, b) == (a + b) % 65537
    assert f.mul(a, b) == (a * b) % 65537
    if a:
        assert f.mul(a, f.inv(a)) == 1


def test_uniform_range():
    f = PrimeField(17)
    draws = f.uniform(np.random.default_rng(0), 10000)
    assert draws.min() >= 0 and draws.max() <= 16
    assert len(np.unique(draws)) == 17


def test_split_file_examples():
    f = PrimeField(65537)
    cf = split_file(b"\x00\x01\x00\x02", 2, f)
    assert cf.chunks.shape == (2, 1)
    assert cf.chunks[0, 0] == 1 and cf.chunks[1, 0] == 2
    assert cf.original_len == 4

    cf = split_file(b"\xff\xff\xff", 2, f)  # 3 bytes -> pad to 2 symbols
    assert cf.chunks.shape == (2, 1)
    assert cf.chunks[0, 0] == 0xFFFF and cf.chunks[1, 0] == 0xFF00

    cf = split_file(b"abcdef", 1, f)
    assert cf.chunks.shape == (1, 3)


def test_split_file_rejects():
    f = PrimeField(65537)
    with pytest.raises(ValueError):
        split_file(b"abc", 0, f)
    with pytest.raises(ValueError):
        split_file(b"abc", 2, PrimeField(7))  # symbol width < 1 byte


def test_encode_forced_coeffs():
    f = PrimeField(65537)
    cf = split_file(b"\x00\x05\x00\x09", 2, f)
    unit = encode_chunk(cf, f, coeffs=np.array([1, 0]))
    assert unit.payload.tolist() == [5]
    zero = encode_chunk(cf, f, coeffs=np.array([0, 0]))
    assert zero.payload.tolist() == [0]


def test_encode_hand_example_q7():
    f = PrimeField(7)
    cf = ChunkedFile(file=1, ell=2, chunks=np.array([[3], [4]]), original_len=None)
    out = encode_chunk(cf, f, coeffs=np.array([2, 5]))
    assert out.payload.tolist() == [5]  # 2*3 + 5*4 = 26 = 5 mod 7
    assert out.coeffs.tolist() == [2, 5]
    assert out.file == 1


def test_encode_draws_are_independent():
    f = PrimeField(65537)
    cf = split_file(b"some payload bytes", 4, f)
    rng = np.random.default_rng(1)
    coeff_sets = {tuple(encode_chunk(cf, f, rng=rng).coeffs.tolist()) for _ in range(50)}
    assert len(coeff_sets) > 1


def test_rank_examples():
    f = PrimeField(65537)
    identity = [np.array([1, 0, 0]), np.array([0, 1, 0]), np.array([0, 0, 1])]
    assert rank(identity, f) == 3
    assert rank([np.array([3, 6]), np.array([3, 6]), np.array([6, 12])], f) == 1
    f2 = PrimeField(2)
    assert rank([np.array([1, 1]), np.array([1, 1]), np.array([0, 1])], f2) == 2
    assert rank([], f) == 0
    assert rank([np.array([0, 0, 0])], f) == 0


@given(
    q=st.sampled_from([2, 3, 5, 7]),
    nrows=st.integers(1, 4),
    ell=st.integers(1, 3),
    data=st.data(),
)
def test_rank_matches_span_oracle(q, nrows, ell, data):
    rows = [
        [data.draw(st.integers(0, q - 1)) for _ in range(ell)] for _ in range(nrows)
    ]
    assert rank([np.array(r) for r in rows], PrimeField(q)) == span_rank(rows, q)


@given(
    q=st.sampled_from([2, 7, 65537]),
    ell=st.integers(1, 5),
    data=st.data(),
)
def test_rank_invariances(q, ell, data):
    f = PrimeField(q)
    nrows = data.draw(st.integers(1, 5))
    rng = np.random.default_rng(data.draw(st.integers(0, 10**6)))
    mat = rng.integers(0, q, size=(nrows, ell))
    base = rank(list(mat), f)
    # row permutation
    assert rank(list(mat[rng.permutation(nrows)]), f) == base
    # nonzero row scaling
    scales = rng.integers(1, q, size=nrows)
    assert rank(list((mat * scales[:, None]) % q), f) == base


def test_rank_many_agrees_with_rank():
    rng = np.random.default_rng(9)
    for q in (2, 7, 65537):
        f = PrimeField(q)
        for m, ell in [(1, 1), (3, 3), (5, 3), (3, 5), (4, 4)]:
            mats = rng.integers(0, q, size=(40, m, ell))
            got = rank_many(mats, q)
            expect = [rank(list(mats[i]), f) for i in range(40)]
            assert got.tolist() == expect


def test_rank_basis_incremental():
    f = PrimeField(7)
    basis = RankBasis(f, 3)
    assert basis.add(np.array([1, 2, 3])) is True
    assert basis.add(np.array([2, 4, 6])) is False  # dependent
    assert basis.add(np.array([0, 1, 1])) is True
    assert basis.rank == 2


def test_decode_single_chunk():
    f = PrimeField(65537)
    cf = split_file(b"hi", 1, f)
    coded = encode_chunk(cf, f, coeffs=np.array([1234]))
    assert decode([coded], 1, 2, f) == b"hi"


def test_decode_identity_coeffs_concatenates():
    f = PrimeField(65537)
    payload = b"abcdefgh"
    cf = split_file(payload, 2, f)
    c0 = encode_chunk(cf, f, coeffs=np.array([1, 0]))
    c1 = encode_chunk(cf, f, coeffs=np.array([0, 1]))
    assert decode([c0, c1], 2, len(payload), f) == payload


def test_decode_rank_deficient_raises():
    f = PrimeField(65537)
    cf = split_file(b"abcdefgh", 2, f)
    c0 = encode_chunk(cf, f, coeffs=np.array([1, 1]))
    c1 = encode_chunk(cf, f, coeffs=np.array([2, 2]))
    with pytest.raises(RankDeficientError):
        decode([c0, c1], 2, 8, f)
    with pytest.raises(RankDeficientError):
        decode([c0], 2, 8, f)


def test_decode_roundtrip_random():
    f = PrimeField(65537)
    rng = np.random.default_rng(77)
    for _ in range(200):
        ell = int(rng.integers(1, 9))
        size = int(rng.integers(0, 65))
        payload = rng.bytes(size)
        cf = split_file(payload, ell, f)
        chunks = []
        while rank([c.coeffs for c in chunks], f) < ell:
            chunks.append(encode_chunk(cf, f, rng=rng))
        assert decode(chunks, ell, len(payload), f) == payload


def test_decode_succeeds_iff_rank_full():
    """Symbolic rank is faithful to actual decodability."""
    f = PrimeField(7)
    rng = np.random.default_rng(5)
    cf = ChunkedFile(file=1, ell=3, chunks=np.array([[1, 2], [3, 4], [5, 6]]), original_len=None)
    hits = {True: 0, False: 0}
    for _ in range(300):
        chunks = [encode_chunk(cf, f, rng=rng) for _ in range(3)]
        full = rank([c.coeffs for c in chunks], f) == 3
        hits[full] += 1
        if full:
            solved = decode(chunks, 3, None, f, return_symbols=True)
            assert np.array_equal(solved, cf.chunks)
        else:
            with pytest.raises(RankDeficientError):
                decode(chunks, 3, None, f, return_symbols=True)
    assert hits[True] > 0 and hits[False] > 0


def test_full_rank_probability_formula():
    assert full_rank_probability(2, 2) == pytest.approx(0.375, rel=1e-12)
    assert full_rank_probability(2, 3) == pytest.approx(0.328125, rel=1e-12)
    exact = float(full_rank_probability_exact(2, 2))
    assert full_rank_probability(2, 2) == pytest.approx(exact, rel=1e-12)


def test_full_rank_empirical_q2():
    rng = np.random.default_rng(123)
    samples = 10**5
    mats = rng.integers(0, 2, size=(samples, 2, 2))
    hit = (rank_many(mats, 2) == 2).mean()
    p = 0.375
    se = (p * (1 - p) / samples) ** 0.5
    assert abs(hit - p) <= 3 * se


def test_coded_chunk_symbolic_payload_none():
    c = CodedChunk(file=3, coeffs=np.array([1, 2]), payload=None)
    assert c.payload is None and c.file == 3
