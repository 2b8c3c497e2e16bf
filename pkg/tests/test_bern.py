import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from normreg import ParameterError, operator_norm, operator_norm_oracle
from normreg.bern import (SparsePattern, degree_trim, discrepancy_check, pair_requirements,
                          sample_bernoulli, sparse_operator_norm, weight_column_cut)
from normreg.dist import stream


def pattern_from(M, p=0.5):
    return SparsePattern.from_dense(np.asarray(M, dtype=float), p=p)


class TestPattern:
    def test_rejects_duplicates(self):
        with pytest.raises(ParameterError):
            SparsePattern(3, [0, 0], [1, 1])

    def test_rejects_out_of_bounds(self):
        with pytest.raises(ParameterError):
            SparsePattern(3, [3], [0])

    def test_text_round_trip(self, rng):
        B = sample_bernoulli(30, 0.1, True, rng)
        C = SparsePattern.from_text(B.to_text())
        assert C.n == B.n and C.p == B.p and C.signed
        np.testing.assert_array_equal(C.densify(), B.densify())

    def test_text_unsigned(self):
        B = pattern_from(np.eye(3))
        text = B.to_text()
        assert text.splitlines()[0] == "3 0.5 0"
        assert SparsePattern.from_text(text).vals is None


class TestSampling:
    def test_p_zero(self, rng):
        assert sample_bernoulli(50, 0.0, False, rng).nnz == 0

    def test_p_one(self, rng):
        B = sample_bernoulli(20, 1.0, True, rng)
        assert B.nnz == 400
        assert set(np.abs(B.values())) == {1.0}

    def test_signed_values(self, rng):
        B = sample_bernoulli(200, 0.04, True, rng)
        assert np.allclose(np.abs(B.values()), 5.0)
        assert abs(np.mean(B.values() > 0) - 0.5) < 0.05

    def test_count_concentration(self):
        n = 2000
        hits = sum(abs(sample_bernoulli(n, 10 / n, False, stream(4, t)).nnz - 20000) <= 1000
                   for t in range(100))
        assert hits >= 95

    def test_deterministic(self):
        a = sample_bernoulli(100, 0.05, True, stream(9))
        b = sample_bernoulli(100, 0.05, True, stream(9))
        np.testing.assert_array_equal(a.densify(), b.densify())

    def test_bad_p(self, rng):
        with pytest.raises(ParameterError):
            sample_bernoulli(5, 1.5, False, rng)


class TestSparseNorm:
    def test_single_entry(self):
        assert sparse_operator_norm(SparsePattern(4, [1], [2], [-3.5])) == pytest.approx(3.5)

    def test_empty(self):
        assert sparse_operator_norm(SparsePattern(4, [], [])) == 0.0

    def test_matches_oracle(self, rng):
        for _ in range(5):
            M = rng.standard_normal((12, 12)) * (rng.random((12, 12)) < 0.3)
            B = SparsePattern.from_dense(M, signed=True)
            assert sparse_operator_norm(B) == pytest.approx(operator_norm_oracle(M), rel=1e-6)

    def test_dense_round_trip(self, rng):
        B = sample_bernoulli(300, 0.02, True, rng)
        assert sparse_operator_norm(B) == pytest.approx(operator_norm(B.densify()), rel=1e-9)

    def test_complete_signed(self, rng):
        B = sample_bernoulli(40, 1.0, True, rng)
        est = sparse_operator_norm(B, tol=1e-14, max_iters=100_000)
        assert est == pytest.approx(np.linalg.norm(B.densify(), 2), rel=1e-9)


class TestDegreeTrim:
    def test_high_threshold_unchanged(self, rng):
        B = sample_bernoulli(100, 0.05, False, rng)
        out, rep = degree_trim(B, 1000, compute_norms=False)
        assert out.nnz == B.nnz and rep.entries_changed == 0

    def test_planted_row(self, rng):
        n = 200
        M = np.eye(n)
        M[5, :50] = 1.0
        out, rep = degree_trim(pattern_from(M, 0.01), 30, compute_norms=False)
        assert rep.pattern.rows == {5} and rep.pattern.cols == frozenset()
        assert out.row_degrees()[5] == 0 and out.nnz == n - 1
        assert rep.rows_touched == 1 and rep.entries_changed == 50

    def test_complete(self, rng):
        B = sample_bernoulli(30, 1.0, False, rng)
        out, _ = degree_trim(B, 20 * 30, compute_norms=False)
        assert out.nnz == 900

    @given(st.integers(0, 10**6), st.floats(0.01, 0.3), st.floats(0.5, 20))
    @settings(max_examples=40, deadline=None)
    def test_postcondition(self, seed, p, thr):
        B = sample_bernoulli(60, p, True, stream(seed))
        out, _ = degree_trim(B, thr, compute_norms=False)
        assert out.row_degrees().max(initial=0) <= thr
        assert out.col_degrees().max(initial=0) <= thr

    def test_norm_non_increase(self):
        n = 800
        B = sample_bernoulli(n, 3 / n, True, stream(17))
        _, rep = degree_trim(B, 6)
        assert rep.norm_after <= rep.norm_before * (1 + 1e-8)

    def test_rejects_bad_threshold(self):
        with pytest.raises(ParameterError):
            degree_trim(SparsePattern(2, [], []), 0)


class TestWeightCut:
    def test_light_columns(self, rng):
        cut = weight_column_cut(pattern_from(np.eye(20), 0.1), 0.1)
        assert cut.J.size == 0 and cut.card_ok and cut.residual_ok

    def test_hand_example(self):
        # n = 4, p = 0.05, L = 10 gives Lnp = 2; column 0 holds 4 entries
        M = np.zeros((4, 4))
        M[:, 0] = 1
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            cut = weight_column_cut(pattern_from(M, 0.05), 0.05, L=10)
        assert cut.cutoff == pytest.approx(2.0)
        assert cut.log_v[0] == pytest.approx(math.log(0.0625))
        assert cut.J.tolist() == [0]
        assert cut.residual_max == 0

    def test_small_L_warns(self):
        with pytest.warns(UserWarning):
            weight_column_cut(pattern_from(np.eye(3)), 0.5, L=2)


class TestDiscrepancy:
    def test_empty_pattern(self):
        res = discrepancy_check(SparsePattern(5, [], []), 0.3, 0.0, 0.0)
        assert res.all_pairs_ok and res.c_equal == 0.0
        assert res.worst[2] == 0

    def test_identity_2x2(self):
        B = pattern_from(np.eye(2), 0.5)
        E, need_a, need_b = pair_requirements(B, 0.5)
        # S = T = {0} is bitmask 1
        assert E[1, 1] == 1 and need_a[1, 1] == pytest.approx(2.0)
        assert need_b[1, 1] == pytest.approx(1.0)       # ln 2 / ln 2
        assert discrepancy_check(B, 0.5, 2.0, -1.0).all_pairs_ok
        assert not discrepancy_check(B, 0.5, 1.99, -1.0).all_pairs_ok
        res = discrepancy_check(B, 0.5, 1.0, 0.5)
        assert not res.all_pairs_ok and res.worst[2] == 1
        assert res.c_equal == pytest.approx(1.0)

    def test_brute_force_agreement(self, rng):
        n, p = 5, 0.4
        M = (rng.random((n, n)) < p).astype(float)
        B = pattern_from(M, p)
        for C1, C2 in [(1.0, 1.0), (2.0, 0.5), (0.5, 3.0)]:
            ok = True
            for s in range(1, 2**n):
                for t in range(1, 2**n):
                    S = [i for i in range(n) if s >> i & 1]
                    T = [j for j in range(n) if t >> j & 1]
                    e = M[np.ix_(S, T)].sum()
                    if e == 0 or e <= C1 * len(S) * len(T) * p + 1e-12:
                        continue
                    lhs = e * math.log(e / (len(S) * len(T) * p))
                    ok &= lhs <= C2 * len(T) * math.log(n / len(T)) + 1e-12
            assert discrepancy_check(B, p, C1, C2).all_pairs_ok == ok

    def test_c_equal_is_minimal(self, rng):
        n, p = 8, 0.3
        B = pattern_from((rng.random((n, n)) < p).astype(float), p)
        c = discrepancy_check(B, p, 1, 1).c_equal
        assert discrepancy_check(B, p, c, c).all_pairs_ok
        assert not discrepancy_check(B, p, c * (1 - 1e-9), c * (1 - 1e-9)).all_pairs_ok

    def test_frontier_points_pass(self, rng):
        n, p = 7, 0.3
        B = pattern_from((rng.random((n, n)) < p).astype(float), p)
        front = discrepancy_check(B, p, 1, 1).frontier
        c1s = [c1 for c1, _ in front]
        assert c1s == sorted(c1s, reverse=True)
        for c1, c2 in front:
            assert discrepancy_check(B, p, c1, c2).all_pairs_ok

    def test_too_large(self):
        with pytest.raises(ParameterError):
            discrepancy_check(SparsePattern(13, [], []), 0.1, 1, 1)
