"""Error-reduction algorithm tests, including an instrumented reference decoder."""

from __future__ import annotations

import numpy as np
import pytest

from zqec.gf2 import BitVec
from zqec.qerc import PauliFrame, build_code, propagate_frame
from zqec.reduce import (
    reduce_x_parallel,
    reduce_x_sequential,
    reduce_z_parallel,
    reduce_z_sequential,
)
from zqec.zgraph import ZGraphParams, sample_random_zgraph


def reference_sequential(syndrome, h_adj, l_adj, dh, dl):
    """Slow reference flip loop that also checks per-flip strict decrease.

    Scan order: high-degree class first, lowest index first, matching the
    production kernel; returns (h_est, l_est, flips, converged, decreases_ok).
    """
    residual = syndrome.copy()
    mh, nl = h_adj.shape[0], l_adj.shape[0]
    h_est = np.zeros(mh, np.uint8)
    l_est = np.zeros(nl, np.uint8)
    flips = 0
    strict = True
    while True:
        before = int(residual.sum())
        if before == 0:
            return h_est, l_est, flips, True, strict
        chosen = None
        for j in range(mh):
            if 2 * int(residual[h_adj[j]].sum()) > dh:
                chosen = ("h", j)
                break
        if chosen is None:
            for j in range(nl):
                if 2 * int(residual[l_adj[j]].sum()) > dl:
                    chosen = ("l", j)
                    break
        if chosen is None:
            return h_est, l_est, flips, False, strict
        cls, j = chosen
        if cls == "h":
            h_est[j] ^= 1
            residual[h_adj[j]] ^= 1
        else:
            l_est[j] ^= 1
            residual[l_adj[j]] ^= 1
        flips += 1
        if int(residual.sum()) >= before:
            strict = False


def graph(n=12, m=6, d1=3, d2=4, seed=0):
    return sample_random_zgraph(ZGraphParams(n=n, m=m, delta1=d1, delta2=d2), seed)


class TestZeroSyndrome:
    def test_all_four_return_zero(self):
        g = graph()
        zero = BitVec.zeros(6)
        for fn in (reduce_x_sequential, reduce_z_sequential, reduce_x_parallel, reduce_z_parallel):
            r = fn(g, zero)
            assert r.estimate_primary.is_zero()
            assert r.aux_check.is_zero()
            assert r.flips == 0
            assert r.converged

    def test_rounds_fields(self):
        g = graph()
        zero = BitVec.zeros(6)
        assert reduce_x_parallel(g, zero).rounds == 1
        assert reduce_z_parallel(g, zero).rounds == 2
        assert reduce_x_sequential(g, zero).rounds == 0


class TestMajorityRule:
    def test_single_bit_syndrome_no_flip_when_degrees_ge_3(self):
        g = graph(d1=3, d2=4)
        r = reduce_x_sequential(g, BitVec.from_indices(6, [1]))
        assert r.estimate_primary.is_zero() and not r.converged
        r = reduce_z_sequential(g, BitVec.from_indices(6, [1]))
        assert r.estimate_primary.is_zero() and not r.converged

    def test_all_ones_syndrome_flips_every_check_class_bit(self):
        g = graph()
        ones = BitVec.from_bits(np.ones(6, np.uint8))
        r = reduce_x_parallel(g, ones)
        assert r.aux_check.weight() == 6

    def test_shape_errors(self):
        g = graph()
        from zqec.errors import ShapeError

        for fn in (reduce_x_sequential, reduce_z_sequential, reduce_x_parallel, reduce_z_parallel):
            with pytest.raises(ShapeError):
                fn(g, BitVec.zeros(7))


class TestSequentialContract:
    def test_matches_reference_and_decreases_strictly(self):
        rng = np.random.default_rng(5)
        for seed in range(3):
            g = graph(n=16, m=8, d1=2, d2=3, seed=seed)
            for _ in range(60):
                syn = rng.integers(0, 2, size=8, dtype=np.uint8)
                got = reduce_x_sequential(g, BitVec.from_bits(syn))
                h, l, flips, conv, strict = reference_sequential(
                    syn.copy(), g.d_cols, g.b_cols, g.params.delta2, g.params.delta1
                )
                assert strict
                assert got.flips == flips and got.converged == conv
                assert got.aux_check.to_bits().tolist() == h.tolist()
                assert got.aux_message.to_bits().tolist() == l.tolist()

                got_z = reduce_z_sequential(g, BitVec.from_bits(syn))
                h, l, flips, conv, strict = reference_sequential(
                    syn.copy(), g.d_rows, g.a_cols, g.params.delta2, g.params.delta1
                )
                assert strict
                assert got_z.flips == flips and got_z.converged == conv
                assert got_z.estimate_primary.to_bits().tolist() == l.tolist()

    def test_flip_bound_on_garbage(self):
        rng = np.random.default_rng(9)
        g = graph(n=48, m=12, d1=2, d2=5, seed=2)
        for _ in range(400):
            syn = BitVec.from_bits(rng.integers(0, 2, size=12, dtype=np.uint8))
            for fn in (reduce_x_sequential, reduce_z_sequential):
                r = fn(g, syn)
                assert r.flips <= syn.weight()

    def test_determinism(self):
        g = graph(seed=4)
        syn = BitVec.from_bits([1, 0, 1, 1, 0, 1])
        a = reduce_x_sequential(g, syn)
        b = reduce_x_sequential(g, syn)
        assert a.estimate_primary == b.estimate_primary and a.flips == b.flips


class TestParallel:
    def test_x_parallel_majority_is_snapshot_based(self):
        g = graph(n=16, m=8, d1=2, d2=4, seed=1)
        syn = BitVec.from_bits(np.array([1, 1, 0, 0, 1, 0, 1, 0], np.uint8))
        r = reduce_x_parallel(g, syn)
        bits = syn.to_bits()
        expect_h = [int(2 * bits[g.d_cols[j]].sum() > 4) for j in range(8)]
        expect_l = [int(2 * bits[g.b_cols[j]].sum() > 2) for j in range(16)]
        assert r.aux_check.to_bits().tolist() == expect_h
        assert r.aux_message.to_bits().tolist() == expect_l

    def test_z_parallel_two_round_structure(self):
        # a lone Z error on one Z-check qubit whose check neighborhood is
        # unshared: round 1 flips exactly that bit, the adjusted syndrome is
        # clean, round 2 is a no-op, and the output is the true residual
        # B^T e_j (instance picked so no other bit reaches majority)
        g = graph(n=24, m=12, d1=2, d2=5, seed=5)
        code = build_code(g)
        f = PauliFrame.zero(code)
        f = PauliFrame(f.xx, f.zx, f.xq, f.zq, f.xz, BitVec.from_indices(12, [3]))
        out = propagate_frame(code, f)
        r = reduce_z_parallel(g, out.sigma_x)
        assert r.aux_check.support().tolist() == [3]
        assert r.estimate_primary == out.z_res
        assert r.rounds == 2

    def test_x_parallel_recovers_lone_check_error(self):
        # needs a check column whose neighborhood majority is unique to it
        g = graph(n=48, m=24, d1=2, d2=7, seed=1)
        code = build_code(g)
        f = PauliFrame.zero(code)
        f = PauliFrame(BitVec.from_indices(24, [22]), f.zx, f.xq, f.zq, f.xz, f.zz)
        out = propagate_frame(code, f)
        r = reduce_x_parallel(g, out.sigma_z)
        assert r.aux_check.support().tolist() == [22]
        assert r.estimate_primary == out.x_res


class TestExactRecoveryWhereExpansionAllows:
    """Sequential reducers recover exactly when columns do not collide.

    At desk scale the lemma hypotheses hold only for favorable degree
    choices: the Delta2-class must not preempt (Delta2 >= 2*Delta1 + 1) and
    message columns must pairwise share fewer than Delta1/2 checks for the
    planted bit to be the unique majority flip.
    """

    def test_isolated_message_errors(self):
        checked = 0
        for seed in (3, 5, 8):
            g = graph(n=32, m=16, d1=3, d2=7, seed=seed)
            code = build_code(g)
            bcols = [frozenset(g.b_cols[j].tolist()) for j in range(32)]
            acols = [frozenset(g.a_cols[j].tolist()) for j in range(32)]

            def clean(cols, j):
                return all(len(cols[j] & cols[i]) <= 1 for i in range(32) if i != j)

            for j in range(32):
                if clean(bcols, j):
                    f = PauliFrame.zero(code)
                    f = PauliFrame(f.xx, f.zx, BitVec.from_indices(32, [j]), f.zq, f.xz, f.zz)
                    out = propagate_frame(code, f)
                    assert reduce_x_sequential(g, out.sigma_z).estimate_primary == out.x_res
                    checked += 1
                if clean(acols, j):
                    f = PauliFrame.zero(code)
                    f = PauliFrame(f.xx, f.zx, f.xq, BitVec.from_indices(32, [j]), f.xz, f.zz)
                    out = propagate_frame(code, f)
                    assert reduce_z_sequential(g, out.sigma_x).estimate_primary == out.z_res
                    checked += 1
        assert checked >= 15
