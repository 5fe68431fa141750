import math

import numpy as np
import pytest

from mddl import (Dictionary, WeightingMatrix, build_weighting, correlations,
                  normalize_atoms, softmax_block, weighted_dictionary)


def random_dict(rng, d=6, n=3, s=2, normalized=True):
    data = rng.normal(size=(d, n * s))
    dic = Dictionary(data=data, class_labels=[f"c{k}" for k in range(n)],
                     domain_labels=[f"dom{l}" for l in range(s)])
    return normalize_atoms(dic) if normalized else dic


class TestCorrelations:
    def test_orthonormal_atoms(self):
        dic = Dictionary(data=np.eye(4), class_labels=["a", "b"],
                         domain_labels=["s", "t"], normalized=True)
        prof = correlations(dic, dic.atom(0, 0))
        assert prof.per_class[0, 0] == 1.0
        assert prof.per_class[0, 1] == 0.0
        assert np.all(prof.per_class[1] == 0.0)

    def test_zero_query(self, rng):
        dic = random_dict(rng)
        prof = correlations(dic, np.zeros(dic.d))
        assert np.all(prof.per_class == 0.0)

    def test_matches_naive_double_loop(self, rng):
        dic = random_dict(rng, d=3, n=2, s=2, normalized=False)
        q = rng.normal(size=3)
        prof = correlations(dic, q)
        for k in range(2):
            for l in range(2):
                naive = sum(dic.atom(k, l)[i] * q[i] for i in range(3))
                assert abs(prof.per_class[k, l] - naive) < 1e-12

    def test_dimension_mismatch(self, rng):
        with pytest.raises(ValueError, match="length"):
            correlations(random_dict(rng), np.zeros(5))


class TestSoftmaxBlock:
    def test_uniform_on_equal_inputs(self):
        assert np.allclose(softmax_block(np.zeros(3)), [1 / 3] * 3, atol=1e-15)

    def test_analytic_ln2(self):
        out = softmax_block(np.array([math.log(2.0), 0.0]))
        assert np.allclose(out, [2 / 3, 1 / 3], atol=1e-12)

    def test_no_overflow_for_huge_inputs(self):
        out = softmax_block(np.array([1000.0, 0.0]))
        assert np.isfinite(out).all()
        assert out[0] >= 1 - 1e-12 and out[1] < 1e-300
        assert abs(out.sum() - 1.0) < 1e-12

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError, match="finite"):
            softmax_block(np.array([np.inf, 0.0]))

    def test_shift_invariance(self, rng):
        c = rng.normal(size=6)
        assert np.allclose(softmax_block(c), softmax_block(c + 13.7), atol=1e-12)


class TestBuildWeighting:
    def test_blocks_sum_to_one(self, rng):
        dic = random_dict(rng, d=8, n=4, s=3)
        w = build_weighting(dic, rng.normal(size=8))
        assert w.blocks.shape == (4, 3)
        assert np.allclose(w.blocks.sum(axis=1), 1.0, atol=1e-9)
        assert np.all(w.blocks > 0.0) and np.all(w.blocks <= 1.0)

    def test_orthogonal_query_gives_uniform_block(self):
        # class 0 atoms live on axes 0 and 1; query on axis 2
        data = np.eye(4)
        dic = Dictionary(data=data, class_labels=["a", "b"],
                         domain_labels=["s", "t"], normalized=True)
        w = build_weighting(dic, np.array([0.0, 0.0, 1.0, 0.0]))
        assert np.allclose(w.blocks[0], [0.5, 0.5], atol=1e-12)

    def test_singleton_blocks_are_one(self, rng):
        dic = random_dict(rng, s=1)
        w = build_weighting(dic, rng.normal(size=dic.d))
        assert np.array_equal(w.blocks, np.ones((dic.n, 1)))

    def test_self_query_block_peaks_at_own_domain(self, rng):
        dic = random_dict(rng, d=24, n=4, s=3)
        for k in range(4):
            for l in range(3):
                w = build_weighting(dic, dic.atom(k, l))
                assert int(np.argmax(w.blocks[k])) == l

    def test_rows_match_block_softmax(self, rng):
        dic = random_dict(rng, d=8, n=3, s=4)
        q = rng.normal(size=8)
        w = build_weighting(dic, q)
        prof = correlations(dic, q)
        for k in range(3):
            assert np.allclose(w.blocks[k], softmax_block(prof.per_class[k]),
                               atol=1e-12)


class TestWeightingMatrix:
    def test_invariants_enforced(self):
        with pytest.raises(ValueError, match="sums"):
            WeightingMatrix(blocks=np.array([[0.5, 0.4]]))
        with pytest.raises(ValueError, match=r"\[0, 1\]"):
            WeightingMatrix(blocks=np.array([[1.5, -0.5]]))

    def test_dense_layout(self):
        w = WeightingMatrix(blocks=np.array([[0.25, 0.75], [0.6, 0.4]]))
        dense = w.dense()
        assert dense.shape == (4, 2)
        assert np.array_equal(dense[:, 0], [0.25, 0.75, 0.0, 0.0])
        assert np.array_equal(dense[:, 1], [0.0, 0.0, 0.6, 0.4])


class TestWeightedDictionary:
    def test_uniform_blocks_give_class_means(self, rng):
        dic = random_dict(rng, d=5, n=2, s=4, normalized=False)
        w = WeightingMatrix(blocks=np.full((2, 4), 0.25))
        out = weighted_dictionary(dic, w)
        for k in range(2):
            assert np.allclose(out[:, k], dic.class_block(k).mean(axis=1), atol=1e-12)

    def test_one_hot_selects_atom(self, rng):
        dic = random_dict(rng, d=5, n=3, s=3, normalized=False)
        blocks = np.zeros((3, 3))
        blocks[:, 1] = 1.0
        out = weighted_dictionary(dic, WeightingMatrix(blocks=blocks))
        for k in range(3):
            assert np.array_equal(out[:, k], dic.atom(k, 1))

    def test_matches_dense_product(self, rng):
        # structure-exploiting product against the materialized matrix
        for _ in range(25):
            d = int(rng.integers(2, 12))
            n = int(rng.integers(1, 6))
            s = int(rng.integers(1, 5))
            dic = random_dict(rng, d=d, n=n, s=s, normalized=False)
            w = build_weighting(dic, rng.normal(size=d))
            direct = weighted_dictionary(dic, w)
            dense = dic.data @ w.dense()
            assert np.max(np.abs(direct - dense)) < 1e-12

    def test_s1_returns_source_exactly(self, rng):
        dic = random_dict(rng, s=1, normalized=False)
        w = build_weighting(dic, rng.normal(size=dic.d))
        assert np.array_equal(weighted_dictionary(dic, w), dic.data)

    def test_convex_hull_membership(self, rng):
        # each weighted column stays inside the box hull of its class atoms
        dic = random_dict(rng, d=6, n=3, s=4)
        w = build_weighting(dic, rng.normal(size=6))
        out = weighted_dictionary(dic, w)
        for k in range(3):
            block = dic.class_block(k)
            assert np.all(out[:, k] <= block.max(axis=1) + 1e-12)
            assert np.all(out[:, k] >= block.min(axis=1) - 1e-12)

    def test_shape_mismatch(self, rng):
        dic = random_dict(rng, n=3, s=2)
        w = WeightingMatrix(blocks=np.full((2, 2), 0.5))
        with pytest.raises(ValueError, match="match"):
            weighted_dictionary(dic, w)
