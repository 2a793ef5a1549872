import numpy as np
import pytest

from softspace.community import CommunityAssignment
from softspace.corpus import CountMatrix, DataError
from softspace.specialization import (community_rca, rca, specialize)
from softspace.synthkit import oracle_rca


def cm(counts, rows=None, cols=None):
    counts = np.asarray(counts)
    rows = rows or [f"d{i}" for i in range(counts.shape[0])]
    cols = cols or [f"s{j}" for j in range(counts.shape[1])]
    return CountMatrix(rows=rows, cols=cols, counts=counts, year_range=(2004, 2021))


class TestRca:
    def test_single_cell_is_one(self):
        r = rca(cm([[7]]))
        assert r.values[0, 0] == pytest.approx(1.0)

    def test_uniform_matrix_all_ones(self):
        r = rca(cm(np.full((4, 5), 3)))
        assert np.allclose(r.values, 1.0)

    def test_two_by_two(self):
        r = rca(cm([[8, 2], [2, 8]]))
        assert np.allclose(r.values, [[1.6, 0.4], [0.4, 1.6]])

    def test_zero_marginals_masked_not_zero(self):
        r = rca(cm([[4, 0], [0, 0]]))
        assert r.undefined_mask[1].all()          # empty row
        assert r.undefined_mask[0, 1]             # empty column
        assert not r.undefined_mask[0, 0]

    def test_all_zero_rejected(self):
        with pytest.raises(DataError):
            rca(cm([[0, 0], [0, 0]]))

    def test_scale_invariance(self):
        a = cm([[3, 1], [2, 5]])
        r1, r2 = rca(a), rca(cm(a.counts * 7))
        assert np.allclose(r1.values, r2.values)

    def test_permutation_equivariance(self):
        counts = np.array([[3, 1, 0], [2, 5, 1]])
        r = rca(cm(counts))
        perm_r, perm_c = [1, 0], [2, 0, 1]
        rp = rca(cm(counts[np.ix_(perm_r, perm_c)]))
        assert np.allclose(rp.values, r.values[np.ix_(perm_r, perm_c)])

    def test_monopoly_column_is_specialization(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            counts = rng.integers(0, 6, size=(4, 4))
            counts[:, 0] = 0
            counts[rng.integers(4), 0] = rng.integers(1, 9)
            if counts.sum() == 0 or (counts.sum(axis=1) == 0).any():
                continue
            r = rca(cm(counts))
            i = int(np.argmax(counts[:, 0]))
            assert r.values[i, 0] >= 1.0 - 1e-12

    def test_oracle_equivalence_small(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            counts = rng.integers(0, 10, size=rng.integers(1, 7, size=2))
            if counts.sum() == 0:
                continue
            r = rca(cm(counts))
            expected = oracle_rca(counts)
            defined = ~np.isnan(expected)
            assert (defined == r.defined()).all()
            assert np.allclose(r.values[defined], expected[defined], rtol=1e-12)

    def test_mention_share_identity(self):
        # sum_s rca[d,s] * (global share of s) = 1 on fully defined rows
        counts = np.array([[5, 3, 2], [1, 4, 7], [2, 2, 2]])
        r = rca(cm(counts))
        shares = counts.sum(axis=0) / counts.sum()
        assert np.allclose(r.values @ shares, 1.0)


class TestSpecialize:
    def test_strict_boundary(self):
        r = rca(cm([[8, 2], [2, 8]]))
        s = specialize(r, 1.0, "strict")
        assert s.members["d0"] == {"s0"} and s.members["d1"] == {"s1"}

    def test_exactly_one_strict_vs_inclusive(self):
        r = rca(cm(np.full((2, 2), 5)))
        assert specialize(r, 1.0, "strict").members["d0"] == set()
        assert specialize(r, 1.0, "inclusive").members["d0"] == {"s0", "s1"}

    def test_masked_never_member(self):
        r = rca(cm([[4, 0], [0, 0]]))
        for comparison in ("strict", "inclusive"):
            s = specialize(r, 0.5, comparison)
            assert "s1" not in s.members["d0"]
            assert s.members["d1"] == set()

    def test_bad_threshold(self):
        from softspace.corpus import ConfigError
        with pytest.raises(ConfigError):
            specialize(rca(cm([[1]])), 0.0)


class TestCommunityRca:
    def test_single_community_all_ones(self):
        m = cm([[3, 1], [2, 5]])
        a = CommunityAssignment({"s0": 0, "s1": 0}, 1, 0.0, 0)
        r = community_rca(m, a)
        assert np.allclose(r.values, 1.0)

    def test_two_block_diagonal(self):
        m = cm([[10, 0], [0, 10]])
        a = CommunityAssignment({"s0": 0, "s1": 1}, 2, 0.0, 0)
        r = community_rca(m, a)
        assert np.allclose(r.values, [[2, 0], [0, 2]])

    def test_summation_matches_manual_rollup(self):
        m = cm([[3, 1, 4], [2, 5, 1]])
        a = CommunityAssignment({"s0": 0, "s1": 0, "s2": 1}, 2, 0.0, 0)
        rolled = cm([[4, 4], [7, 1]])
        assert np.allclose(community_rca(m, a).values, rca(rolled).values)

    def test_no_covered_columns_rejected(self):
        m = cm([[1]])
        a = CommunityAssignment({"other": 0}, 1, 0.0, 0)
        with pytest.raises(DataError):
            community_rca(m, a)
