"""GF(2) vector/matrix arithmetic, rank, and kernel tests."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zqec import backend
from zqec._kernels_py import matmat_mul as py_matmat
from zqec._kernels_py import matvec_parity as py_matvec
from zqec._kernels_py import rank_words as py_rank
from zqec.errors import ShapeError
from zqec.gf2 import BitMatrix, BitVec, kernel_basis, mat_mat_mul, mat_vec_mul, rank


def naive_mat_vec(dense: np.ndarray, bits: np.ndarray) -> np.ndarray:
    out = np.zeros(dense.shape[0], dtype=np.uint8)
    for i in range(dense.shape[0]):
        acc = 0
        for j in range(dense.shape[1]):
            acc ^= int(dense[i, j]) & int(bits[j])
        out[i] = acc
    return out


def naive_mat_mat(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.zeros((a.shape[0], b.shape[1]), dtype=np.uint8)
    for i in range(a.shape[0]):
        for j in range(b.shape[1]):
            acc = 0
            for t in range(a.shape[1]):
                acc ^= int(a[i, t]) & int(b[t, j])
            out[i, j] = acc
    return out


def random_matrix(rng: np.random.Generator, rows: int, cols: int) -> BitMatrix:
    return BitMatrix.from_dense(rng.integers(0, 2, size=(rows, cols), dtype=np.uint8))


class TestMatVec:
    def test_identity(self):
        v = BitVec.from_bits([1, 0, 1])
        assert mat_vec_mul(BitMatrix.identity(3), v) == v

    def test_zero_matrix(self):
        v = BitVec.from_bits([1, 1, 1])
        assert mat_vec_mul(BitMatrix.zeros(3, 3), v) == BitVec.zeros(3)

    def test_hand_enumerated(self):
        m = BitMatrix.from_dense([[1, 1, 0], [0, 1, 1]])
        v = BitVec.from_bits([1, 1, 0])
        assert mat_vec_mul(m, v).to_bits().tolist() == [0, 1]

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            mat_vec_mul(BitMatrix.identity(3), BitVec.zeros(4))

    def test_against_naive_reference_up_to_512(self):
        rng = np.random.default_rng(11)
        for rows, cols in [(1, 1), (7, 13), (64, 64), (65, 63), (200, 512), (512, 512)]:
            dense = rng.integers(0, 2, size=(rows, cols), dtype=np.uint8)
            bits = rng.integers(0, 2, size=cols, dtype=np.uint8)
            got = BitMatrix.from_dense(dense).mat_vec(BitVec.from_bits(bits))
            assert np.array_equal(got.to_bits(), naive_mat_vec(dense, bits))


class TestMatMat:
    def test_identity_left(self):
        rng = np.random.default_rng(3)
        m = random_matrix(rng, 5, 9)
        assert BitMatrix.identity(5).mat_mat(m) == m

    def test_self_cancel(self):
        m = BitMatrix.from_dense([[1, 1], [1, 1]])
        assert m.mat_mat(m).is_zero()

    def test_random_8x8_against_naive(self):
        rng = np.random.default_rng(5)
        a = rng.integers(0, 2, size=(8, 8), dtype=np.uint8)
        b = rng.integers(0, 2, size=(8, 8), dtype=np.uint8)
        got = mat_mat_mul(BitMatrix.from_dense(a), BitMatrix.from_dense(b))
        assert np.array_equal(got.to_dense(), naive_mat_mat(a, b))

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            mat_mat_mul(BitMatrix.zeros(2, 3), BitMatrix.zeros(4, 2))

    def test_wide_unaligned(self):
        rng = np.random.default_rng(8)
        a = rng.integers(0, 2, size=(10, 70), dtype=np.uint8)
        b = rng.integers(0, 2, size=(70, 130), dtype=np.uint8)
        got = mat_mat_mul(BitMatrix.from_dense(a), BitMatrix.from_dense(b))
        assert np.array_equal(got.to_dense(), (a.astype(int) @ b.astype(int)) % 2)


class TestRank:
    def test_zero(self):
        assert rank(BitMatrix.zeros(4, 7)) == 0

    def test_identity(self):
        assert rank(BitMatrix.identity(6)) == 6

    def test_dependent_row(self):
        assert rank(BitMatrix.from_dense([[1, 1, 0], [0, 1, 1], [1, 0, 1]])) == 2

    def test_rank_equals_rank_of_transpose(self):
        rng = np.random.default_rng(17)
        for _ in range(25):
            m = random_matrix(rng, int(rng.integers(1, 40)), int(rng.integers(1, 40)))
            assert m.rank() == m.transpose().rank()


class TestKernel:
    def test_identity_has_empty_kernel(self):
        assert kernel_basis(BitMatrix.identity(5)) == []

    def test_zero_row_spans_everything(self):
        basis = kernel_basis(BitMatrix.zeros(1, 6))
        assert len(basis) == 6
        stacked = BitMatrix.from_dense(np.array([b.to_bits() for b in basis]))
        assert stacked.rank() == 6

    def test_hand_case(self):
        m = BitMatrix.from_dense([[1, 1, 0], [0, 1, 1]])
        basis = kernel_basis(m)
        assert [b.to_bits().tolist() for b in basis] == [[1, 1, 1]]

    def test_kernel_contract_random(self):
        rng = np.random.default_rng(23)
        for _ in range(30):
            m = random_matrix(rng, int(rng.integers(1, 20)), int(rng.integers(1, 24)))
            basis = m.kernel_basis()
            assert len(basis) == m.cols - m.rank()
            for b in basis:
                assert m.mat_vec(b).weight() == 0
            if basis:
                stacked = BitMatrix.from_dense(np.array([b.to_bits() for b in basis]))
                assert stacked.rank() == len(basis)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 24), st.integers(1, 24), st.integers(1, 24), st.randoms(use_true_random=False))
def test_product_associativity(a, b, c, rnd):
    rng = np.random.default_rng(rnd.getrandbits(32))
    m = random_matrix(rng, a, b)
    n = random_matrix(rng, b, c)
    v = BitVec.from_bits(rng.integers(0, 2, size=c, dtype=np.uint8))
    assert m.mat_vec(n.mat_vec(v)) == m.mat_mat(n).mat_vec(v)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 40), st.integers(1, 40), st.randoms(use_true_random=False))
def test_transpose_involution_and_rank(rows, cols, rnd):
    rng = np.random.default_rng(rnd.getrandbits(32))
    m = random_matrix(rng, rows, cols)
    assert m.transpose().transpose() == m
    assert m.rank() == m.transpose().rank()


class TestBitVec:
    def test_tail_bits_masked(self):
        v = BitVec(3, np.array([0xFF], dtype=np.uint64))
        assert v.weight() == 3
        assert v.to_bits().tolist() == [1, 1, 1]

    def test_from_indices(self):
        v = BitVec.from_indices(70, [0, 69])
        assert v.weight() == 2
        assert v.get(69) == 1 and v.get(1) == 0

    def test_xor_and_support(self):
        a = BitVec.from_bits([1, 0, 1, 0])
        b = BitVec.from_bits([1, 1, 0, 0])
        assert (a ^ b).support().tolist() == [1, 2]

    def test_immutable(self):
        v = BitVec.from_bits([1, 0])
        with pytest.raises(ValueError):
            v.words[0] = 0


class TestBackendAgreement:
    """The compiled and fallback kernels must be bit-identical."""

    def test_matvec_matmat_rank(self):
        rng = np.random.default_rng(31)
        for _ in range(10):
            r, c, k = (int(x) for x in rng.integers(1, 90, size=3))
            a = random_matrix(rng, r, c)
            b = random_matrix(rng, c, k)
            v = BitVec.from_bits(rng.integers(0, 2, size=c, dtype=np.uint8))

            out = np.zeros_like(a.mat_vec(v).words)
            py_matvec(a.words, v.words, out)
            assert np.array_equal(out, a.mat_vec(v).words)

            out2 = np.zeros((r, b.words.shape[1]), dtype=np.uint64)
            py_matmat(a.words, c, b.words, out2)
            assert np.array_equal(out2, a.mat_mat(b).words)

            assert py_rank(a.words.copy(), c) == a.rank()

    def test_backend_reports_name(self):
        assert backend.active_backend() in ("compiled", "python")
