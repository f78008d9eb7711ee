"""Bit-packed dense linear algebra over GF(2).

Matrices and vectors are stored row-major as 64-bit words, least-significant
bit first within each word, so bit ``j`` of a row lives in word ``j >> 6`` at
position ``j & 63``.  All trailing pad bits are kept at zero.  Gaussian
elimination is vectorized with numpy over whole word-rows, which keeps rank
and solve calls on 6144 x 16384 matrices in the seconds range.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

try:  # optional accelerator; the numpy path computes identical bits
    from numba import njit as _njit
except ImportError:  # pragma: no cover
    _njit = None

WORD_BITS = 64
_ONE = np.uint64(1)


def _nwords(cols: int) -> int:
    return (cols + WORD_BITS - 1) // WORD_BITS


def _pack_rows(dense: np.ndarray) -> np.ndarray:
    """Pack a (rows, cols) 0/1 array into (rows, nwords) uint64 words."""
    dense = np.ascontiguousarray(dense, dtype=np.uint8)
    rows, cols = dense.shape
    nw = _nwords(cols)
    padded = np.zeros((rows, nw * WORD_BITS), dtype=np.uint8)
    padded[:, :cols] = dense & 1
    packed = np.packbits(padded, axis=1, bitorder="little")
    return packed.view("<u8").reshape(rows, nw)


def _unpack_rows(words: np.ndarray, cols: int) -> np.ndarray:
    rows = words.shape[0]
    as_bytes = np.ascontiguousarray(words).view(np.uint8).reshape(rows, -1)
    bits = np.unpackbits(as_bytes, axis=1, bitorder="little")
    return bits[:, :cols].astype(np.uint8)


@dataclass
class BitVector:
    """Packed GF(2) vector; pad bits beyond ``length`` are zero."""

    length: int
    words: np.ndarray

    @classmethod
    def zeros(cls, length: int) -> "BitVector":
        return cls(length, np.zeros(_nwords(length), dtype=np.uint64))

    @classmethod
    def from_dense(cls, bits: np.ndarray) -> "BitVector":
        bits = np.asarray(bits, dtype=np.uint8).reshape(1, -1)
        return cls(bits.shape[1], _pack_rows(bits)[0])

    @classmethod
    def from_indices(cls, length: int, indices) -> "BitVector":
        v = cls.zeros(length)
        for j in indices:
            v.set(int(j), 1)
        return v

    def to_dense(self) -> np.ndarray:
        return _unpack_rows(self.words.reshape(1, -1), self.length)[0]

    def copy(self) -> "BitVector":
        return BitVector(self.length, self.words.copy())

    def get(self, j: int) -> int:
        return int((self.words[j >> 6] >> np.uint64(j & 63)) & _ONE)

    def set(self, j: int, value: int) -> None:
        mask = _ONE << np.uint64(j & 63)
        if value:
            self.words[j >> 6] |= mask
        else:
            self.words[j >> 6] &= ~mask

    def weight(self) -> int:
        return int(np.bitwise_count(self.words).sum())

    def is_zero(self) -> bool:
        return not self.words.any()

    def __xor__(self, other: "BitVector") -> "BitVector":
        return BitVector(self.length, self.words ^ other.words)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, BitVector)
            and self.length == other.length
            and bool(np.array_equal(self.words, other.words))
        )


@dataclass
class BitMatrix:
    """Packed GF(2) matrix, one row per word-row."""

    rows: int
    cols: int
    words: np.ndarray

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "BitMatrix":
        return cls(rows, cols, np.zeros((rows, _nwords(cols)), dtype=np.uint64))

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        m = cls.zeros(n, n)
        for i in range(n):
            m.set(i, i, 1)
        return m

    @classmethod
    def from_dense(cls, dense: np.ndarray) -> "BitMatrix":
        dense = np.atleast_2d(np.asarray(dense, dtype=np.uint8))
        rows, cols = dense.shape
        return cls(rows, cols, _pack_rows(dense))

    @classmethod
    def from_row_supports(cls, rows: int, cols: int, supports) -> "BitMatrix":
        m = cls.zeros(rows, cols)
        for i, sup in enumerate(supports):
            for j in sup:
                m.set(i, int(j), 1)
        return m

    def to_dense(self) -> np.ndarray:
        return _unpack_rows(self.words, self.cols)

    def copy(self) -> "BitMatrix":
        return BitMatrix(self.rows, self.cols, self.words.copy())

    def get(self, i: int, j: int) -> int:
        return int((self.words[i, j >> 6] >> np.uint64(j & 63)) & _ONE)

    def set(self, i: int, j: int, value: int) -> None:
        mask = _ONE << np.uint64(j & 63)
        if value:
            self.words[i, j >> 6] |= mask
        else:
            self.words[i, j >> 6] &= ~mask

    def row(self, i: int) -> BitVector:
        return BitVector(self.cols, self.words[i].copy())

    def row_weights(self) -> np.ndarray:
        return np.bitwise_count(self.words).sum(axis=1).astype(np.int64)

    def column_weights(self) -> np.ndarray:
        return self.to_dense().sum(axis=0, dtype=np.int64)

    def row_support(self, i: int) -> np.ndarray:
        return np.nonzero(_unpack_rows(self.words[i : i + 1], self.cols)[0])[0]

    def mul_vector(self, v: BitVector) -> BitVector:
        """Matrix-vector product over GF(2)."""
        if v.length != self.cols:
            raise ValueError(f"length mismatch: {v.length} != {self.cols}")
        parities = (np.bitwise_count(self.words & v.words).sum(axis=1) & 1).astype(np.uint8)
        return BitVector.from_dense(parities)

    def vstack(self, other: "BitMatrix") -> "BitMatrix":
        if self.cols != other.cols:
            raise ValueError("column count mismatch")
        return BitMatrix(
            self.rows + other.rows, self.cols, np.vstack([self.words, other.words])
        )


@dataclass
class RowEchelonCache:
    """Reduced row-space basis with its pivot columns, for membership queries."""

    basis: BitMatrix
    pivot_cols: np.ndarray
    rank: int


def _column_bits(words: np.ndarray, col: int) -> np.ndarray:
    return (words[:, col >> 6] >> np.uint64(col & 63)) & _ONE


def _eliminate(
    words: np.ndarray,
    cols: int,
    bvec: Optional[np.ndarray] = None,
    reduced: bool = True,
) -> list[int]:
    """In-place Gaussian elimination; returns pivot column list.

    Pivot choice: scan columns left to right, take the lowest remaining row
    with a 1 (deterministic).  ``reduced=True`` clears above the pivots too.
    ``bvec`` is an optional augmented 0/1 column kept in sync with row ops;
    it rides along as an extra word so every row op is a single XOR.
    """
    work = words
    if bvec is not None:
        work = np.hstack([words, bvec.astype(np.uint64).reshape(-1, 1)])
    if _eliminate_kernel is not None:
        pivots = [int(c) for c in _eliminate_kernel(work, cols, reduced)]
    else:
        pivots = _eliminate_loop(work, cols, reduced)
    if bvec is not None:
        bvec[:] = (work[:, -1] & _ONE).astype(bvec.dtype)
        words[:] = work[:, :-1]
    return pivots


def _eliminate_loop(work: np.ndarray, cols: int, reduced: bool) -> list[int]:
    """Vectorized-numpy elimination core (fallback when numba is absent)."""
    nrows = work.shape[0]
    pivots: list[int] = []
    r = 0
    zero_checked_r = -1
    for c in range(cols):
        col = (work[:, c >> 6] >> np.uint64(c & 63)) & _ONE
        sub = col[r:]
        p_off = int(np.argmax(sub))  # first row holding a 1, if any
        if not sub[p_off]:
            # rank may have saturated; once the remaining rows are all zero
            # no later column can yield a pivot
            if r != zero_checked_r:
                zero_checked_r = r
                if not work[r:].any():
                    break
            continue
        p = r + p_off
        if p != r:
            work[[r, p]] = work[[p, r]]
            col[[r, p]] = col[[p, r]]
        if reduced:
            col[r] = 0
            targets = np.nonzero(col)[0]
        else:
            targets = np.nonzero(col[r + 1 :])[0] + r + 1
        if targets.size:
            work[targets] ^= work[r]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    return pivots


if _njit is not None:

    @_njit(cache=True)
    def _eliminate_kernel(work, cols, reduced):  # pragma: no cover - jitted
        nrows, nwords = work.shape
        limit = cols if cols < nrows else nrows
        pivots = np.empty(limit, dtype=np.int64)
        count = 0
        r = 0
        zero_checked_r = -1
        for c in range(cols):
            w = c >> 6
            mask = np.uint64(1) << np.uint64(c & 63)
            p = -1
            for i in range(r, nrows):
                if work[i, w] & mask:
                    p = i
                    break
            if p < 0:
                if r != zero_checked_r:
                    zero_checked_r = r
                    all_zero = True
                    for i in range(r, nrows):
                        for k in range(nwords):
                            if work[i, k]:
                                all_zero = False
                                break
                        if not all_zero:
                            break
                    if all_zero:
                        break
                continue
            if p != r:
                for k in range(nwords):
                    tmp = work[r, k]
                    work[r, k] = work[p, k]
                    work[p, k] = tmp
            start = 0 if reduced else r + 1
            for i in range(start, nrows):
                if i != r and (work[i, w] & mask):
                    for k in range(nwords):
                        work[i, k] ^= work[r, k]
            pivots[count] = c
            count += 1
            r += 1
            if r == nrows:
                break
        return pivots[:count]

else:
    _eliminate_kernel = None


def rank(m: BitMatrix) -> int:
    """GF(2) rank via row echelon form."""
    work = m.words.copy()
    return len(_eliminate(work, m.cols, reduced=False))


def solvable(m: BitMatrix, b: BitVector) -> bool:
    """Consistency probe for ``m x = b`` (row echelon only, no solution)."""
    if b.length != m.rows:
        raise ValueError(f"rhs length {b.length} != rows {m.rows}")
    work = m.words.copy()
    bvec = b.to_dense()
    r = len(_eliminate(work, m.cols, bvec=bvec, reduced=False))
    return not bvec[r:].any()


def row_echelon_cache(m: BitMatrix) -> RowEchelonCache:
    """Reduced row-space basis of ``m`` (zero rows dropped)."""
    work = m.words.copy()
    pivots = _eliminate(work, m.cols, reduced=True)
    r = len(pivots)
    basis = BitMatrix(r, m.cols, work[:r].copy())
    return RowEchelonCache(basis, np.asarray(pivots, dtype=np.int64), r)


def in_row_space(cache: RowEchelonCache, v: BitVector) -> bool:
    """True iff ``v`` is a GF(2) combination of the cached basis rows."""
    if v.length != cache.basis.cols:
        raise ValueError("length mismatch")
    if cache.rank == 0:
        return v.is_zero()
    pivots = cache.pivot_cols
    bits = (v.words[pivots >> 6] >> (pivots & 63).astype(np.uint64)) & _ONE
    sel = np.nonzero(bits)[0]
    if sel.size == 0:
        return v.is_zero()
    combo = np.bitwise_xor.reduce(cache.basis.words[sel], axis=0)
    return bool(np.array_equal(combo, v.words))


def solve(
    m: BitMatrix, b: BitVector, with_nullspace: bool = False
) -> Optional[tuple[BitVector, Optional[BitMatrix]]]:
    """Solve ``m x = b`` over GF(2).

    Returns ``(particular, nullspace_basis)`` when consistent, else None.
    The nullspace basis is computed only when ``with_nullspace`` is set;
    otherwise that slot is None.  The particular solution sets all free
    variables to zero, so its support lies on the pivot columns.
    """
    if b.length != m.rows:
        raise ValueError(f"rhs length {b.length} != rows {m.rows}")
    work = m.words.copy()
    bvec = b.to_dense()
    pivots = _eliminate(work, m.cols, bvec=bvec, reduced=True)
    r = len(pivots)
    if bvec[r:].any():
        return None
    particular = BitVector.zeros(m.cols)
    for i, c in enumerate(pivots):
        if bvec[i]:
            particular.set(c, 1)
    basis = None
    if with_nullspace:
        basis = _nullspace_from_rref(work[:r], m.cols, pivots)
    return particular, basis


def _nullspace_from_rref(rref_words: np.ndarray, cols: int, pivots: list[int]) -> BitMatrix:
    pivot_cols = np.asarray(pivots, dtype=np.int64)
    mask = np.ones(cols, dtype=bool)
    mask[pivot_cols] = False
    free_cols = np.nonzero(mask)[0]
    dense = np.zeros((len(free_cols), cols), dtype=np.uint8)
    dense[np.arange(len(free_cols)), free_cols] = 1
    if len(pivot_cols) and len(free_cols):
        rref_dense = _unpack_rows(rref_words[: len(pivot_cols)], cols)
        dense[:, pivot_cols] = rref_dense[:, free_cols].T
    return BitMatrix.from_dense(dense) if len(free_cols) else BitMatrix.zeros(0, cols)


def nullspace(m: BitMatrix) -> BitMatrix:
    """Basis of the right kernel, one vector per row."""
    work = m.words.copy()
    pivots = _eliminate(work, m.cols, reduced=True)
    return _nullspace_from_rref(work[: len(pivots)], m.cols, pivots)


def submatrix_columns(m: BitMatrix, columns) -> BitMatrix:
    """Column-gather: new matrix whose column ``k`` is ``m[:, columns[k]]``."""
    columns = np.asarray(columns, dtype=np.int64)
    if len(columns) == 0:
        return BitMatrix.zeros(m.rows, 0)
    dense = _unpack_rows(m.words, m.cols)
    return BitMatrix(m.rows, len(columns), _pack_rows(dense[:, columns]))


def truncate_columns(m: BitMatrix, ncols: int) -> BitMatrix:
    """View-like copy of the first ``ncols`` columns."""
    if ncols >= m.cols:
        return m
    nw = _nwords(ncols)
    words = m.words[:, :nw].copy()
    tail = ncols & 63
    if tail:
        words[:, nw - 1] &= np.uint64((1 << tail) - 1)
    return BitMatrix(m.rows, ncols, words)


def mask_columns_beyond(m: BitMatrix, ncols: int) -> BitMatrix:
    """Copy of ``m`` with every column at index >= ncols forced to zero."""
    out = m.copy()
    w, b = divmod(ncols, WORD_BITS)
    if b:
        out.words[:, w] &= np.uint64((1 << b) - 1)
        w += 1
    out.words[:, w:] = 0
    return out


def transpose(m: BitMatrix) -> BitMatrix:
    return BitMatrix(m.cols, m.rows, _pack_rows(m.to_dense().T))


def product_parity(a: BitMatrix, b: BitMatrix) -> np.ndarray:
    """Dense parity table of ``a @ b.T`` over GF(2), shape (a.rows, b.rows)."""
    if a.cols != b.cols:
        raise ValueError("column count mismatch")
    out = np.empty((a.rows, b.rows), dtype=np.uint8)
    for i in range(a.rows):
        out[i] = np.bitwise_count(a.words[i] & b.words).sum(axis=1) & 1
    return out
