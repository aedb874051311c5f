"""Dense GF(2) vectors and matrices on packed 64-bit words.

BitVec and BitMatrix carry every parity check, error pattern, and syndrome in
the package.  Storage is row-major packed uint64, little-endian bit order
within a word; bits past the logical length are kept zero.  Values are
immutable after construction (the numpy buffers are frozen).
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from . import backend
from .errors import ShapeError


def _nwords(n: int) -> int:
    return (n + 63) >> 6


def _tail_mask(n: int) -> np.uint64:
    r = n & 63
    if r == 0:
        return np.uint64(0xFFFFFFFFFFFFFFFF)
    return np.uint64((1 << r) - 1)


def pack_bits(bits: np.ndarray) -> np.ndarray:
    """Pack a 0/1 uint8 array into little-endian uint64 words."""
    bits = np.ascontiguousarray(bits, dtype=np.uint8)
    nbytes = _nwords(bits.shape[-1]) * 8
    packed = np.packbits(bits, axis=-1, bitorder="little")
    if packed.shape[-1] < nbytes:
        pad = np.zeros(packed.shape[:-1] + (nbytes - packed.shape[-1],), dtype=np.uint8)
        packed = np.concatenate([packed, pad], axis=-1)
    return packed.view(np.uint64)


def unpack_bits(words: np.ndarray, n: int) -> np.ndarray:
    """Unpack uint64 words back into a 0/1 uint8 array of length n."""
    flat = np.unpackbits(words.view(np.uint8), axis=-1, bitorder="little")
    return flat[..., :n]


class BitVec:
    """Immutable bit vector over GF(2)."""

    __slots__ = ("n", "words")

    def __init__(self, n: int, words: np.ndarray | None = None):
        if n < 0:
            raise ShapeError("negative length")
        self.n = n
        if words is None:
            words = np.zeros(_nwords(n), dtype=np.uint64)
        else:
            words = np.ascontiguousarray(words, dtype=np.uint64)
            if words.shape != (_nwords(n),):
                raise ShapeError(f"expected {_nwords(n)} words for length {n}")
            if n & 63 and words.size:
                words = words.copy()
                words[-1] &= _tail_mask(n)
        words.flags.writeable = False
        self.words = words

    @classmethod
    def zeros(cls, n: int) -> "BitVec":
        return cls(n)

    @classmethod
    def from_bits(cls, bits: Iterable[int] | np.ndarray) -> "BitVec":
        arr = np.asarray(list(bits) if not isinstance(bits, np.ndarray) else bits, dtype=np.uint8)
        return cls(arr.shape[0], pack_bits(arr & 1))

    @classmethod
    def from_indices(cls, n: int, indices: Iterable[int]) -> "BitVec":
        bits = np.zeros(n, dtype=np.uint8)
        idx = np.asarray(list(indices), dtype=np.int64)
        if idx.size:
            if idx.min() < 0 or idx.max() >= n:
                raise ShapeError("index out of range")
            bits[idx] = 1
        return cls(n, pack_bits(bits))

    def to_bits(self) -> np.ndarray:
        return unpack_bits(self.words, self.n).copy()

    def support(self) -> np.ndarray:
        return np.nonzero(unpack_bits(self.words, self.n))[0]

    def weight(self) -> int:
        return backend.popcount_words(self.words)

    def get(self, i: int) -> int:
        if not 0 <= i < self.n:
            raise ShapeError("index out of range")
        return int((self.words[i >> 6] >> np.uint64(i & 63)) & np.uint64(1))

    def is_zero(self) -> bool:
        return not self.words.any()

    def __xor__(self, other: "BitVec") -> "BitVec":
        if self.n != other.n:
            raise ShapeError(f"length mismatch: {self.n} vs {other.n}")
        return BitVec(self.n, self.words ^ other.words)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, BitVec)
            and self.n == other.n
            and bool(np.array_equal(self.words, other.words))
        )

    def __hash__(self) -> int:
        return hash((self.n, self.words.tobytes()))

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        if self.n <= 64:
            return f"BitVec({''.join(str(b) for b in self.to_bits())})"
        return f"BitVec(n={self.n}, weight={self.weight()})"


class BitMatrix:
    """Immutable dense GF(2) matrix, packed row-major."""

    __slots__ = ("rows", "cols", "words")

    def __init__(self, rows: int, cols: int, words: np.ndarray | None = None):
        if rows < 0 or cols < 0:
            raise ShapeError("negative dimension")
        self.rows = rows
        self.cols = cols
        nw = _nwords(cols)
        if words is None:
            words = np.zeros((rows, nw), dtype=np.uint64)
        else:
            words = np.ascontiguousarray(words, dtype=np.uint64)
            if words.shape != (rows, nw):
                raise ShapeError(f"expected shape {(rows, nw)}")
            if cols & 63 and words.size:
                words = words.copy()
                words[:, -1] &= _tail_mask(cols)
        words.flags.writeable = False
        self.words = words

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "BitMatrix":
        return cls(rows, cols)

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        bits = np.eye(n, dtype=np.uint8)
        return cls.from_dense(bits)

    @classmethod
    def from_dense(cls, dense: Sequence[Sequence[int]] | np.ndarray) -> "BitMatrix":
        arr = np.asarray(dense, dtype=np.uint8) & 1
        if arr.ndim != 2:
            raise ShapeError("expected a 2-D array")
        return cls(arr.shape[0], arr.shape[1], pack_bits(arr))

    @classmethod
    def from_indices(cls, rows: int, cols: int, rc_pairs: Iterable[tuple[int, int]]) -> "BitMatrix":
        dense = np.zeros((rows, cols), dtype=np.uint8)
        for r, c in rc_pairs:
            if not (0 <= r < rows and 0 <= c < cols):
                raise ShapeError(f"entry ({r},{c}) out of range")
            dense[r, c] ^= 1
        return cls.from_dense(dense)

    def to_dense(self) -> np.ndarray:
        return unpack_bits(self.words, self.cols).reshape(self.rows, self.cols).copy()

    def row(self, i: int) -> BitVec:
        return BitVec(self.cols, self.words[i])

    def ones(self) -> int:
        return backend.popcount_words(self.words.ravel())

    def row_weights(self) -> np.ndarray:
        return np.bitwise_count(self.words).sum(axis=1, dtype=np.int64)

    def col_weights(self) -> np.ndarray:
        return self.to_dense().sum(axis=0, dtype=np.int64)

    def transpose(self) -> "BitMatrix":
        return BitMatrix.from_dense(self.to_dense().T)

    def mat_vec(self, v: BitVec) -> BitVec:
        if v.n != self.cols:
            raise ShapeError(f"matrix has {self.cols} cols, vector length {v.n}")
        out = np.zeros(_nwords(self.rows), dtype=np.uint64)
        backend.matvec_parity(self.words, v.words, out)
        return BitVec(self.rows, out)

    def mat_mat(self, other: "BitMatrix") -> "BitMatrix":
        if self.cols != other.rows:
            raise ShapeError(f"inner dimensions differ: {self.cols} vs {other.rows}")
        out = np.zeros((self.rows, _nwords(other.cols)), dtype=np.uint64)
        backend.matmat_mul(self.words, self.cols, other.words, out)
        return BitMatrix(self.rows, other.cols, out)

    def __xor__(self, other: "BitMatrix") -> "BitMatrix":
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise ShapeError("shape mismatch")
        return BitMatrix(self.rows, self.cols, self.words ^ other.words)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, BitMatrix)
            and self.rows == other.rows
            and self.cols == other.cols
            and bool(np.array_equal(self.words, other.words))
        )

    def __hash__(self) -> int:
        return hash((self.rows, self.cols, self.words.tobytes()))

    def is_zero(self) -> bool:
        return not self.words.any()

    def rank(self) -> int:
        work = self.words.copy()
        return int(backend.rank_words(work, self.cols))

    def kernel_basis(self) -> list[BitVec]:
        """Deterministic right-kernel basis: one vector per free column of the RREF."""
        rref, pivots = _rref(self.words.copy(), self.cols)
        pivot_set = set(pivots)
        free_cols = [c for c in range(self.cols) if c not in pivot_set]
        dense = unpack_bits(rref, self.cols).reshape(self.rows, self.cols)
        basis = []
        for fc in free_cols:
            bits = np.zeros(self.cols, dtype=np.uint8)
            bits[fc] = 1
            for r, pc in enumerate(pivots):
                bits[pc] = dense[r, fc]
            basis.append(BitVec(self.cols, pack_bits(bits)))
        return basis

    @staticmethod
    def hstack(mats: Sequence["BitMatrix"]) -> "BitMatrix":
        if not mats:
            raise ShapeError("nothing to stack")
        rows = mats[0].rows
        if any(m.rows != rows for m in mats):
            raise ShapeError("row counts differ")
        dense = np.concatenate([m.to_dense() for m in mats], axis=1)
        return BitMatrix.from_dense(dense)

    def submatrix_cols(self, start: int, stop: int) -> "BitMatrix":
        return BitMatrix.from_dense(self.to_dense()[:, start:stop])

    def __repr__(self) -> str:
        return f"BitMatrix({self.rows}x{self.cols}, ones={self.ones()})"


def _rref(work: np.ndarray, cols: int) -> tuple[np.ndarray, list[int]]:
    """Reduced row-echelon form in place; pivots by first set bit in column order."""
    rows = work.shape[0]
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        w = c >> 6
        b = np.uint64(c & 63)
        nz = np.nonzero((work[r:, w] >> b) & np.uint64(1))[0]
        if nz.size == 0:
            continue
        p = r + int(nz[0])
        if p != r:
            work[[r, p]] = work[[p, r]]
        others = np.nonzero((work[:, w] >> b) & np.uint64(1))[0]
        others = others[others != r]
        if others.size:
            work[others] ^= work[r]
        pivots.append(c)
        r += 1
    return work, pivots


def mat_vec_mul(m: BitMatrix, v: BitVec) -> BitVec:
    """Matrix-vector product over GF(2)."""
    return m.mat_vec(v)


def mat_mat_mul(m: BitMatrix, n: BitMatrix) -> BitMatrix:
    """Matrix-matrix product over GF(2)."""
    return m.mat_mat(n)


def rank(m: BitMatrix) -> int:
    """Row rank over GF(2)."""
    return m.rank()


def kernel_basis(m: BitMatrix) -> list[BitVec]:
    """Independent vectors spanning the right kernel of m."""
    return m.kernel_basis()
