"""Packed GF(2) linear algebra against a naive bit-by-bit reference."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from acqldpc import gf2
from acqldpc.gf2 import BitMatrix, BitVector


# --- naive reference implementation (python ints, one bit at a time) -------


def naive_rank(dense):
    rows = [int("0" + "".join(str(int(b)) for b in reversed(row)), 2) for row in dense]
    ncols = dense.shape[1] if dense.ndim == 2 else 0
    rank = 0
    for col in range(ncols):
        pivot = None
        for i in range(rank, len(rows)):
            if (rows[i] >> col) & 1:
                pivot = i
                break
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        for i in range(len(rows)):
            if i != rank and ((rows[i] >> col) & 1):
                rows[i] ^= rows[rank]
        rank += 1
    return rank


def naive_solvable(dense, b):
    aug = np.hstack([dense, np.asarray(b, dtype=np.uint8).reshape(-1, 1)])
    return naive_rank(aug) == naive_rank(dense)


def dense_strategy(max_rows=64, max_cols=64):
    return st.integers(1, max_rows).flatmap(
        lambda r: st.integers(1, max_cols).flatmap(
            lambda c: st.lists(
                st.lists(st.integers(0, 1), min_size=c, max_size=c),
                min_size=r,
                max_size=r,
            ).map(lambda rows: np.array(rows, dtype=np.uint8))
        )
    )


# --- pack/unpack ------------------------------------------------------------


def test_round_trip_dense():
    rng = np.random.default_rng(1)
    for cols in (1, 63, 64, 65, 130, 512):
        dense = rng.integers(0, 2, size=(7, cols), dtype=np.uint8)
        m = BitMatrix.from_dense(dense)
        assert np.array_equal(m.to_dense(), dense)
        v = BitVector.from_dense(dense[0])
        assert np.array_equal(v.to_dense(), dense[0])


def test_pad_bits_zero():
    m = BitMatrix.from_dense(np.ones((3, 70), dtype=np.uint8))
    assert int(m.words[0, 1] >> np.uint64(6)) == 0
    assert m.row_weights().tolist() == [70, 70, 70]


def test_get_set_single_bits():
    m = BitMatrix.zeros(4, 100)
    m.set(2, 77, 1)
    assert m.get(2, 77) == 1
    m.set(2, 77, 0)
    assert m.get(2, 77) == 0


# --- rank -------------------------------------------------------------------


def test_rank_trivial_cases():
    assert gf2.rank(BitMatrix.zeros(4, 4)) == 0
    assert gf2.rank(BitMatrix.identity(5)) == 5


@settings(max_examples=60, deadline=None)
@given(dense_strategy())
def test_rank_matches_naive(dense):
    assert gf2.rank(BitMatrix.from_dense(dense)) == naive_rank(dense)


@settings(max_examples=30, deadline=None)
@given(dense_strategy(32, 32), st.integers(0, 2**32 - 1))
def test_rank_permutation_invariant(dense, seed):
    rng = np.random.default_rng(seed)
    permed = dense[rng.permutation(dense.shape[0])][:, rng.permutation(dense.shape[1])]
    assert gf2.rank(BitMatrix.from_dense(dense)) == gf2.rank(BitMatrix.from_dense(permed))


# --- solve ------------------------------------------------------------------


def test_solve_identity():
    m = BitMatrix.identity(3)
    b = BitVector.from_dense([1, 0, 1])
    particular, ns = gf2.solve(m, b, with_nullspace=True)
    assert particular.to_dense().tolist() == [1, 0, 1]
    assert ns.rows == 0


def test_solve_single_parity_check():
    m = BitMatrix.from_dense([[1, 1]])
    b = BitVector.from_dense([1])
    particular, ns = gf2.solve(m, b, with_nullspace=True)
    assert particular.to_dense().tolist() == [1, 0]
    assert ns.rows == 1
    assert ns.to_dense().tolist() == [[1, 1]]


def test_solve_inconsistent_returns_none():
    m = BitMatrix.from_dense([[1, 0], [1, 0]])
    b = BitVector.from_dense([1, 0])
    assert gf2.solve(m, b) is None


def test_solve_matches_exhaustive_enumeration_six_vars():
    # Restrict a random 20x30 system to a 6-column block and compare the
    # affine solution set with brute force over all 2^6 assignments.
    rng = np.random.default_rng(7)
    for trial in range(10):
        dense = rng.integers(0, 2, size=(20, 30), dtype=np.uint8)
        sub = dense[:, :6]
        x_true = rng.integers(0, 2, size=6, dtype=np.uint8)
        b = (sub @ x_true) % 2
        brute = {
            tuple(bits)
            for bits in itertools.product((0, 1), repeat=6)
            if not ((sub @ np.array(bits, dtype=np.uint8)) % 2 ^ b).any()
        }
        res = gf2.solve(BitMatrix.from_dense(sub), BitVector.from_dense(b), with_nullspace=True)
        assert res is not None
        particular, ns = res
        span = {tuple(particular.to_dense())}
        for combo in itertools.product((0, 1), repeat=ns.rows):
            v = particular.to_dense()
            for k, c in enumerate(combo):
                if c:
                    v = v ^ ns.to_dense()[k]
            span.add(tuple(v))
        assert span == brute


@settings(max_examples=40, deadline=None)
@given(dense_strategy(24, 24), st.integers(0, 2**32 - 1))
def test_solve_postconditions(dense, seed):
    rng = np.random.default_rng(seed)
    m = BitMatrix.from_dense(dense)
    b = BitVector.from_dense(rng.integers(0, 2, size=dense.shape[0], dtype=np.uint8))
    res = gf2.solve(m, b, with_nullspace=True)
    if res is None:
        assert not naive_solvable(dense, b.to_dense())
        return
    particular, ns = res
    assert m.mul_vector(particular) == b
    for i in range(ns.rows):
        assert m.mul_vector(ns.row(i)).is_zero()
    assert gf2.rank(m) + ns.rows == m.cols


# --- row space membership ---------------------------------------------------


def test_in_row_space_trivial():
    m = BitMatrix.from_dense([[1, 1, 0], [0, 1, 1]])
    cache = gf2.row_echelon_cache(m)
    assert gf2.in_row_space(cache, BitVector.zeros(3))
    assert gf2.in_row_space(cache, m.row(0))
    assert gf2.in_row_space(cache, m.row(0) ^ m.row(1))
    assert not gf2.in_row_space(cache, BitVector.from_dense([1, 0, 0]))


@settings(max_examples=40, deadline=None)
@given(dense_strategy(20, 40), st.integers(0, 2**32 - 1))
def test_in_row_space_iff_rank_unchanged(dense, seed):
    rng = np.random.default_rng(seed)
    v = rng.integers(0, 2, size=dense.shape[1], dtype=np.uint8)
    cache = gf2.row_echelon_cache(BitMatrix.from_dense(dense))
    appended = np.vstack([dense, v])
    expected = naive_rank(appended) == naive_rank(dense)
    assert gf2.in_row_space(cache, BitVector.from_dense(v)) == expected


# --- misc helpers -----------------------------------------------------------


def test_mul_vector():
    m = BitMatrix.from_dense([[1, 1, 0], [0, 1, 1]])
    v = BitVector.from_dense([1, 1, 1])
    assert m.mul_vector(v).to_dense().tolist() == [0, 0]


def test_submatrix_columns_and_mask():
    dense = np.arange(12).reshape(3, 4) % 2
    m = BitMatrix.from_dense(dense.astype(np.uint8))
    sub = gf2.submatrix_columns(m, [3, 0])
    assert np.array_equal(sub.to_dense(), dense[:, [3, 0]])
    masked = gf2.mask_columns_beyond(m, 2)
    assert np.array_equal(masked.to_dense()[:, :2], dense[:, :2])
    assert not masked.to_dense()[:, 2:].any()


def test_nullspace_dimension():
    rng = np.random.default_rng(3)
    dense = rng.integers(0, 2, size=(10, 25), dtype=np.uint8)
    m = BitMatrix.from_dense(dense)
    ns = gf2.nullspace(m)
    assert ns.rows == m.cols - gf2.rank(m)
    for i in range(ns.rows):
        assert m.mul_vector(ns.row(i)).is_zero()
    assert gf2.rank(ns) == ns.rows


def test_product_parity():
    a = BitMatrix.from_dense([[1, 1, 0], [1, 0, 1]])
    b = BitMatrix.from_dense([[1, 1, 1], [0, 1, 1]])
    table = gf2.product_parity(a, b)
    expected = (a.to_dense() @ b.to_dense().T) % 2
    assert np.array_equal(table, expected)
