"""Z-graph sampling, expansion verification, and file round-trip tests."""

from __future__ import annotations

from itertools import combinations

import numpy as np
import pytest

from zqec.errors import ParameterError, ParseError, ValidationError
from zqec.gf2 import BitMatrix
from zqec.zgraph import (
    ExpansionReport,
    ZGraph,
    ZGraphParams,
    load_zgraph,
    sample_random_zgraph,
    save_zgraph,
    verify_expansion_exact,
    verify_expansion_sampled,
)


def naive_expansion_check(g: ZGraph, direction: int) -> tuple[float, tuple | None, int]:
    """Dumb itertools enumerator used as an oracle for the exact verifier."""
    p = g.params
    if direction == 0:
        nbrs1 = [set(g.a_cols[v].tolist()) for v in range(p.n)]
        nbrs2 = [set(g.d_rows[v].tolist()) for v in range(p.m)]
    else:
        nbrs1 = [set(g.b_cols[v].tolist()) for v in range(p.n)]
        nbrs2 = [set(g.d_cols[v].tolist()) for v in range(p.m)]
    cap1 = int(p.eta1 * p.n)
    cap2 = int(p.eta2 * p.m)
    worst = float("inf")
    witness = None
    tested = 0
    for s1 in range(cap1 + 1):
        for s2 in range(cap2 + 1):
            for sub1 in combinations(range(p.n), s1):
                for sub2 in combinations(range(p.m), s2):
                    nb: set[int] = set()
                    for v in sub1:
                        nb |= nbrs1[v]
                    for v in sub2:
                        nb |= nbrs2[v]
                    slack = len(nb) - (
                        (1 - p.eps1) * p.delta1 * s1 + (1 - p.eps2) * p.delta2 * s2
                    )
                    tested += 1
                    worst = min(worst, slack)
                    if slack < 0 and witness is None:
                        witness = (sub1, sub2)
    return worst, witness, tested


def duplicate_neighborhood_graph() -> ZGraph:
    """Hand-built graph where two L2 vertices share all their R2 neighbors."""
    params = ZGraphParams(n=4, m=4, delta1=1, delta2=2, eta1=0.25, eta2=0.5, eps1=0.25, eps2=0.25)
    A = BitMatrix.identity(4)
    B = BitMatrix.identity(4)
    D = BitMatrix.from_dense(
        [[1, 1, 0, 0], [1, 1, 0, 0], [0, 0, 1, 1], [0, 0, 1, 1]]
    )
    return ZGraph(params, A, B, D)


class TestParams:
    def test_divisibility(self):
        with pytest.raises(ParameterError):
            ZGraphParams(n=10, m=4, delta1=1, delta2=3)

    def test_size_order(self):
        with pytest.raises(ParameterError):
            ZGraphParams(n=4, m=8, delta1=2, delta2=2)
        with pytest.raises(ParameterError):
            ZGraphParams(n=4, m=0, delta1=1, delta2=1)

    def test_degree_feasibility(self):
        with pytest.raises(ParameterError):
            ZGraphParams(n=8, m=4, delta1=2, delta2=5)

    def test_default_eps_follow_degrees(self):
        p = ZGraphParams(n=16, m=8, delta1=4, delta2=6)
        assert p.eps1 == pytest.approx(1.5 / 4)
        assert p.eps2 == pytest.approx(1.5 / 6)
        assert p.delta1_prime == 8


class TestSampling:
    def test_matching_case(self):
        g = sample_random_zgraph(ZGraphParams(n=2, m=2, delta1=1, delta2=1), 0)
        for mat in (g.A, g.B, g.D):
            assert np.all(mat.row_weights() == 1)
            assert np.all(mat.col_weights() == 1)

    def test_edge_count_identity(self):
        p = ZGraphParams(n=24, m=6, delta1=2, delta2=5)
        g = sample_random_zgraph(p, 3)
        assert g.A.ones() == p.n * p.delta1 == p.m * p.delta1_prime
        assert g.B.ones() == p.n * p.delta1
        assert g.D.ones() == p.m * p.delta2

    def test_determinism_and_invariants(self):
        p = ZGraphParams(n=8, m=4, delta1=2, delta2=3)
        g1 = sample_random_zgraph(p, 99)
        g2 = sample_random_zgraph(p, 99)
        assert g1.A == g2.A and g1.B == g2.B and g1.D == g2.D
        g3 = sample_random_zgraph(p, 100)
        assert not (g1.A == g3.A and g1.B == g3.B and g1.D == g3.D)

    def test_degree_fuzz_grid(self):
        cases = 0
        for n, ratio in ((8, 2), (8, 4), (16, 2), (24, 4), (36, 3), (64, 2)):
            m = n // ratio
            for delta1 in (1, 2, 3):
                if delta1 > m or n * delta1 % m:
                    continue
                for delta2 in (1, 2, 3):
                    if delta2 > m:
                        continue
                    for seed in (0, 1):
                        p = ZGraphParams(n=n, m=m, delta1=delta1, delta2=delta2)
                        g = sample_random_zgraph(p, seed)
                        assert np.all(g.A.col_weights() == delta1)
                        assert np.all(g.A.row_weights() == p.delta1_prime)
                        assert np.all(g.B.col_weights() == delta1)
                        assert np.all(g.D.row_weights() == delta2)
                        assert np.all(g.D.col_weights() == delta2)
                        cases += 1
        assert cases >= 50

    def test_single_vertex_neighborhood_is_exactly_delta1(self):
        p = ZGraphParams(n=32, m=8, delta1=3, delta2=4)
        g = sample_random_zgraph(p, 11)
        for v in range(p.n):
            assert len(set(g.a_cols[v].tolist())) == p.delta1

    def test_large_sample_fast_and_valid(self):
        p = ZGraphParams(n=1024, m=512, delta1=8, delta2=32)
        g = sample_random_zgraph(p, 1)
        assert np.all(g.D.row_weights() == 32)


class TestExactVerification:
    def test_single_vertex_never_counterexample(self):
        p = ZGraphParams(n=12, m=6, delta1=2, delta2=3, eta1=1 / 12, eta2=0.0, eps1=0.5, eps2=0.5)
        g = sample_random_zgraph(p, 5)
        r0, r1 = verify_expansion_exact(g)
        assert r0.certified == "exact" and r1.certified == "exact"
        assert r0.worst_slack >= 0

    def test_forced_violation_refuted(self):
        g = duplicate_neighborhood_graph()
        r0, _ = verify_expansion_exact(g)
        assert r0.certified == "refuted"
        assert r0.counterexample == ((), (0, 1))
        assert r0.worst_slack < 0

    def test_matches_naive_enumerator(self):
        p = ZGraphParams(n=12, m=6, delta1=3, delta2=4, eta1=1 / 3, eta2=1 / 3, eps1=0.5, eps2=0.5)
        for seed in range(4):
            g = sample_random_zgraph(p, seed)
            reports = verify_expansion_exact(g)
            for direction, rep in enumerate(reports):
                worst, witness, tested = naive_expansion_check(g, direction)
                if rep.certified == "refuted":
                    assert witness is not None
                    assert rep.counterexample == witness
                else:
                    assert witness is None
                    assert rep.tested_count == tested
                    assert rep.worst_slack == pytest.approx(worst)

    def test_budget_refusal(self):
        p = ZGraphParams(n=64, m=32, delta1=2, delta2=3, eta1=0.5, eta2=0.5)
        g = sample_random_zgraph(p, 0)
        with pytest.raises(ParameterError):
            verify_expansion_exact(g, budget=1000)


class TestSampledVerification:
    def test_refutes_forced_violation_via_pair_schedule(self):
        g = duplicate_neighborhood_graph()
        r0, _ = verify_expansion_sampled(g, trials=1, seed=0)
        assert r0.certified == "refuted"
        assert r0.worst_slack < 0

    def test_deterministic(self):
        p = ZGraphParams(n=24, m=12, delta1=2, delta2=4, eta1=0.2, eta2=0.2, eps1=0.3, eps2=0.3)
        g = sample_random_zgraph(p, 2)
        a = verify_expansion_sampled(g, trials=100, seed=9)
        b = verify_expansion_sampled(g, trials=100, seed=9)
        assert a == b

    def test_trials_precondition(self):
        g = duplicate_neighborhood_graph()
        with pytest.raises(ParameterError):
            verify_expansion_sampled(g, trials=0, seed=0)

    def test_agreement_with_exact_on_small_graphs(self):
        p = ZGraphParams(n=12, m=6, delta1=3, delta2=4, eta1=1 / 4, eta2=1 / 3, eps1=0.4, eps2=0.4)
        for seed in range(6):
            g = sample_random_zgraph(p, seed)
            e0, e1 = verify_expansion_exact(g)
            s0, s1 = verify_expansion_sampled(g, trials=300, seed=seed + 1)
            for exact, sampled in ((e0, s0), (e1, s1)):
                if exact.certified == "exact":
                    assert sampled.certified == "sampled"
                else:
                    assert sampled.certified == "refuted"

    def test_report_invariant(self):
        with pytest.raises(ValidationError):
            ExpansionReport("refuted", 1.0, 3, None)
        with pytest.raises(ValidationError):
            ExpansionReport("exact", -1.0, 3, None)


class TestFileRoundTrip:
    def test_round_trip_identity(self, tmp_path):
        p = ZGraphParams(n=16, m=8, delta1=2, delta2=3)
        g = sample_random_zgraph(p, 13)
        path = tmp_path / "g.zg"
        save_zgraph(g, str(path))
        g2 = load_zgraph(str(path))
        assert g2.A == g.A and g2.B == g.B and g2.D == g.D
        assert g2.params.n == p.n and g2.params.delta2 == p.delta2

    def test_missing_edge_reports_column_weight(self, tmp_path):
        p = ZGraphParams(n=8, m=4, delta1=2, delta2=2)
        g = sample_random_zgraph(p, 1)
        path = tmp_path / "g.zg"
        save_zgraph(g, str(path))
        lines = path.read_text().splitlines()
        drop = next(i for i, ln in enumerate(lines) if i > 1 and len(ln.split()) == 2)
        del lines[drop]
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(ValidationError, match="weight"):
            load_zgraph(str(path))

    def test_zero_sized_header_rejected(self, tmp_path):
        path = tmp_path / "bad.zg"
        path.write_text("zgraph v1 0 0 1 1\nA\nend\nB\nend\nD\nend\n")
        with pytest.raises(ValidationError):
            load_zgraph(str(path))

    def test_malformed_lines_carry_line_numbers(self, tmp_path):
        path = tmp_path / "bad.zg"
        path.write_text("zgraph v1 4 4 1 1\nA\n0 zero\nend\nB\nend\nD\nend\n")
        with pytest.raises(ParseError) as err:
            load_zgraph(str(path))
        assert err.value.line == 3

    def test_truncated_section(self, tmp_path):
        path = tmp_path / "bad.zg"
        path.write_text("zgraph v1 4 4 1 1\nA\n0 0\n")
        with pytest.raises(ParseError):
            load_zgraph(str(path))
