import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from normreg import (NormNotConverged, ParameterError, ZeroPattern, apply_zero_pattern,
                     bilinear_bound_check, col_l2_norms, operator_norm,
                     operator_norm_oracle, row_l2_norms)
from normreg.linalg import from_bytes, load_matrix, save_matrix, to_bytes

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
small_matrices = hnp.arrays(np.float64, st.tuples(st.integers(1, 12), st.integers(1, 12)),
                            elements=finite)


@pytest.mark.parametrize("A, expected", [
    (np.eye(3), [1, 1, 1]),
    (np.zeros((3, 4)), [0, 0, 0]),
    (np.array([[3.0, 4.0], [0.0, 0.0]]), [5, 0]),
])
def test_row_l2_norms(A, expected):
    np.testing.assert_allclose(row_l2_norms(A), expected)


def test_col_norms_are_row_norms_of_transpose(rng):
    A = rng.standard_normal((5, 7))
    np.testing.assert_allclose(col_l2_norms(A), row_l2_norms(A.T))


class TestZeroPattern:
    def test_empty_pattern_keeps_matrix(self, rng):
        A = rng.standard_normal((4, 4))
        out = apply_zero_pattern(A, ZeroPattern())
        assert np.array_equal(out, A)
        assert out is not A

    def test_all_rows_gives_zero(self, rng):
        A = rng.standard_normal((4, 4))
        assert not apply_zero_pattern(A, ZeroPattern(rows=range(4))).any()

    def test_single_entry(self):
        out = apply_zero_pattern(np.eye(2), ZeroPattern(entries=[(0, 0)]))
        np.testing.assert_array_equal(out, [[0, 0], [0, 1]])

    def test_input_untouched(self, rng):
        A = rng.standard_normal((3, 3))
        keep = A.copy()
        apply_zero_pattern(A, ZeroPattern(rows=[1], cols=[2], entries=[(0, 0)]))
        assert np.array_equal(A, keep)

    @pytest.mark.parametrize("Z", [ZeroPattern(rows=[3]), ZeroPattern(cols=[-1]),
                                   ZeroPattern(entries=[(0, 5)])])
    def test_out_of_bounds(self, Z):
        with pytest.raises(ParameterError):
            apply_zero_pattern(np.eye(3), Z)

    def test_dedup_and_dict(self):
        Z = ZeroPattern(rows=[2, 1, 2], cols=[0], entries=[(1, 1), (1, 1)])
        assert Z.to_dict() == {"rows": [1, 2], "cols": [0], "entries": [[1, 1]]}
        assert ZeroPattern.from_dict(Z.to_dict()) == Z

    @given(small_matrices, st.data())
    @settings(max_examples=60, deadline=None)
    def test_zero_iff_in_pattern(self, A, data):
        m, n = A.shape
        rows = data.draw(st.sets(st.integers(0, m - 1)))
        cols = data.draw(st.sets(st.integers(0, n - 1)))
        ents = data.draw(st.sets(st.tuples(st.integers(0, m - 1), st.integers(0, n - 1))))
        out = apply_zero_pattern(A, ZeroPattern(rows, cols, ents))
        for i in range(m):
            for j in range(n):
                hit = i in rows or j in cols or (i, j) in ents
                assert out[i, j] == (0.0 if hit else A[i, j])


class TestOperatorNorm:
    def test_identity(self):
        assert operator_norm(np.eye(10)) == pytest.approx(1.0, rel=1e-12)

    def test_diagonal(self):
        assert operator_norm(np.diag([3.0, 4.0])) == pytest.approx(4.0, rel=1e-8)

    def test_zero(self):
        assert operator_norm(np.zeros((5, 5))) == 0.0

    def test_matches_oracle_8x8(self, rng):
        A = rng.standard_normal((8, 8))
        assert operator_norm(A) == pytest.approx(operator_norm_oracle(A), rel=1e-6)

    def test_rectangular(self, rng):
        A = rng.standard_normal((6, 11))
        assert operator_norm(A) == pytest.approx(np.linalg.svd(A, compute_uv=False)[0],
                                                 rel=1e-6)

    def test_non_convergence_is_flagged(self, rng):
        A = rng.standard_normal((30, 30))
        with pytest.warns(NormNotConverged):
            est = operator_norm(A, tol=1e-15, max_iters=3, full_output=True)
        assert not est.converged
        assert est.iterations == 3
        assert 0 < est.value <= np.linalg.norm(A, 2) * (1 + 1e-12)

    def test_bad_tol(self):
        with pytest.raises(ParameterError):
            operator_norm(np.eye(2), tol=0)

    def test_zero_rows_are_dropped_exactly(self, rng):
        A = rng.standard_normal((9, 9))
        A[[1, 4], :] = 0
        A[:, 7] = 0
        assert operator_norm(A) == pytest.approx(operator_norm_oracle(A), rel=1e-6)

    @given(small_matrices)
    @settings(max_examples=50, deadline=None)
    def test_oracle_agreement(self, A):
        oracle = operator_norm_oracle(A)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", NormNotConverged)
            est = operator_norm(A, full_output=True)
        if oracle == 0:
            assert est.value == 0
        elif est.converged:
            # Rayleigh convergence is slow only when the top two singular values nearly tie
            s = np.linalg.svd(A, compute_uv=False)
            gap = 1 - (s[1] / s[0]) ** 2 if s.size > 1 else 1.0
            assert est.value == pytest.approx(oracle, rel=max(1e-6, 1e-7 / max(gap, 1e-12)))

    @pytest.mark.parametrize("c", [-2.0, 0.5])
    def test_scale_equivariance(self, rng, c):
        A = rng.standard_normal((20, 20))
        assert operator_norm(c * A) == pytest.approx(abs(c) * operator_norm(A), rel=1e-9)

    @given(small_matrices, st.data())
    @settings(max_examples=50, deadline=None)
    def test_zeroing_lines_never_increases_norm(self, A, data):
        m, n = A.shape
        rows = data.draw(st.sets(st.integers(0, m - 1)))
        cols = data.draw(st.sets(st.integers(0, n - 1)))
        B = apply_zero_pattern(A, ZeroPattern(rows, cols))
        assert operator_norm_oracle(B) <= operator_norm_oracle(A) * (1 + 1e-9) + 1e-12


class TestOracle:
    def test_shift(self):
        assert operator_norm_oracle(np.array([[0.0, 1.0], [0.0, 0.0]])) == pytest.approx(1.0)

    def test_rank_one(self, rng):
        u = rng.standard_normal(7)
        v = rng.standard_normal(7)
        u *= 2 / np.linalg.norm(u)
        v *= 3 / np.linalg.norm(v)
        assert operator_norm_oracle(np.outer(u, v)) == pytest.approx(6.0, rel=1e-10)

    def test_all_ones(self):
        assert operator_norm_oracle(np.ones((5, 5))) == pytest.approx(5.0, rel=1e-12)

    def test_size_limit(self):
        with pytest.raises(ParameterError):
            operator_norm_oracle(np.eye(65))

    def test_against_lapack(self, rng):
        for _ in range(10):
            A = rng.standard_normal((16, 16))
            assert operator_norm_oracle(A) == pytest.approx(np.linalg.norm(A, 2), rel=1e-10)


class TestBilinearBound:
    def test_identity(self, rng):
        u = rng.standard_normal(6)
        v = rng.standard_normal(6)
        u /= np.linalg.norm(u)
        v /= np.linalg.norm(v)
        res = bilinear_bound_check(np.eye(6), u, v)
        assert res.lhs == pytest.approx(u @ v)
        assert res.rhs == pytest.approx(1.0)
        assert res.holds

    def test_zero(self):
        e = np.eye(4)[0]
        res = bilinear_bound_check(np.zeros((4, 4)), e, e)
        assert res.lhs == 0 and res.rhs == 0 and res.holds

    def test_rejects_non_unit(self):
        with pytest.raises(ParameterError):
            bilinear_bound_check(np.eye(3), np.ones(3), np.eye(3)[0])

    def test_random_sparse_instances(self, rng):
        for _ in range(100):
            n = int(rng.integers(2, 40))
            Q = rng.standard_normal((n, n)) * (rng.random((n, n)) < rng.uniform(0.02, 0.5))
            u = rng.standard_normal(n)
            v = rng.standard_normal(n)
            res = bilinear_bound_check(Q, u / np.linalg.norm(u), v / np.linalg.norm(v))
            assert res.holds

    def test_tightness_on_single_column(self):
        # Q with one column of norm r and unit row counts: equality with aligned u, v
        Q = np.zeros((4, 4))
        Q[:, 2] = [1.0, 2.0, 2.0, 4.0]
        u = Q[:, 2] / np.linalg.norm(Q[:, 2])
        v = np.eye(4)[2]
        res = bilinear_bound_check(Q, u, v)
        assert res.lhs == pytest.approx(res.rhs)
        assert res.holds


class TestSerialization:
    def test_binary_layout(self):
        A = np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])
        buf = to_bytes(A)
        assert buf[:16] == (2).to_bytes(8, "little") + (3).to_bytes(8, "little")
        assert np.frombuffer(buf[16:24], "<f8")[0] == 1.0
        assert np.frombuffer(buf[24:32], "<f8")[0] == 2.0
        assert np.array_equal(from_bytes(buf), A)

    def test_truncated_payload(self):
        with pytest.raises(ParameterError):
            from_bytes(to_bytes(np.eye(2))[:-1])

    @pytest.mark.parametrize("suffix", [".bin", ".csv"])
    def test_file_round_trip(self, tmp_path, rng, suffix):
        A = rng.standard_normal((5, 5)) * 1e-3
        path = tmp_path / f"m{suffix}"
        save_matrix(path, A)
        assert np.array_equal(load_matrix(path), A)


@pytest.mark.parametrize("scale", [1e-160, 1e-300, 1e160, 1e300])
def test_extreme_scales(scale):
    A = np.array([[3.0, 0.0], [0.0, 4.0]]) * scale
    assert operator_norm(A) == pytest.approx(4 * scale, rel=1e-8)
    assert operator_norm_oracle(A) == pytest.approx(4 * scale, rel=1e-12)
