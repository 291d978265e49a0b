import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from magicflow.stats import (
    DegenerateVariance,
    EmptySample,
    OneClassOnly,
    SingularDesign,
    auc,
    mann_whitney_rank_biserial,
    ols_r2,
    paired_bootstrap_mean_ci,
    pearson,
    spearman,
)


def pair_count_auc(scores, labels):
    pos = [s for s, l in zip(scores, labels) if l]
    neg = [s for s, l in zip(scores, labels) if not l]
    total = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p, n in itertools.product(pos, neg))
    return total / (len(pos) * len(neg))


class TestAuc:
    def test_examples(self):
        assert auc([0.1, 0.9], [False, True]) == 1.0
        assert auc([5, 5, 5, 5], [True, False, True, False]) == 0.5
        assert auc([1, 2, 3, 4], [True, False, True, False]) == 0.25

    def test_one_class(self):
        with pytest.raises(OneClassOnly):
            auc([1, 2], [True, True])

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            auc([1, 2], [True])

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.tuples(st.integers(0, 5), st.booleans()), min_size=2, max_size=25))
    def test_matches_pair_counting(self, data):
        scores, labels = zip(*data)
        if len(set(labels)) < 2:
            return
        got = auc(scores, labels)
        assert math.isclose(got, pair_count_auc(scores, labels))
        # Strictly monotone transform leaves AUC unchanged; negation mirrors it.
        assert math.isclose(auc([3 * s + 7 for s in scores], labels), got)
        assert math.isclose(auc([-s for s in scores], labels), 1 - got)


class TestCorrelation:
    def test_pearson(self):
        x = [1.0, 2.0, 3.0, 4.0]
        assert math.isclose(pearson(x, [2 * v + 1 for v in x]), 1.0)
        assert math.isclose(pearson(x, [-v for v in x]), -1.0)
        assert math.isclose(pearson([1, 2, 3], [1, 3, 2]), 0.5)

    def test_pearson_degenerate(self):
        with pytest.raises(DegenerateVariance):
            pearson([1, 1, 1], [1, 2, 3])

    def test_spearman(self):
        x = [0.5, 1.0, 2.0, 3.5]
        assert math.isclose(spearman(x, [math.exp(v) for v in x]), 1.0)
        assert math.isclose(spearman(x, x[::-1]), -1.0)
        assert math.isclose(spearman([1, 2, 3, 4], [1, 3, 2, 4]), 0.8)


class TestOls:
    def test_affine(self):
        x = [[float(v)] for v in range(10)]
        assert math.isclose(ols_r2(x, [3 * r[0] - 2 for r in x]), 1.0)

    def test_noise(self):
        rng = np.random.default_rng(7)
        x = rng.normal(size=(5000, 1))
        y = rng.normal(size=5000)
        assert abs(ols_r2(x, y)) < 0.05

    def test_duplicate_column(self):
        x = [[float(v), float(v)] for v in range(6)]
        with pytest.raises(SingularDesign):
            ols_r2(x, list(range(6)))

    def test_too_few_rows(self):
        with pytest.raises(SingularDesign):
            ols_r2([[1.0]], [1.0])


class TestBootstrap:
    def test_constant(self):
        ci = paired_bootstrap_mean_ci([0.007] * 12, resamples=500)
        assert math.isclose(ci.mean, 0.007)
        assert math.isclose(ci.lo95, 0.007) and math.isclose(ci.hi95, 0.007)

    def test_symmetric_contains_zero(self):
        ci = paired_bootstrap_mean_ci([-1, 1], resamples=10_000)
        assert ci.lo95 <= 0 <= ci.hi95
        assert not ci.excludes_zero()

    def test_deterministic(self):
        d = [0.1, -0.2, 0.05, 0.3, 0.0]
        assert paired_bootstrap_mean_ci(d, seed=3) == paired_bootstrap_mean_ci(d, seed=3)

    def test_empty(self):
        with pytest.raises(EmptySample):
            paired_bootstrap_mean_ci([])


class TestRankBiserial:
    def test_examples(self):
        assert mann_whitney_rank_biserial([5, 6, 7], [1, 2]) == 1.0
        assert mann_whitney_rank_biserial([1, 2, 3], [1, 2, 3]) == 0.0
        # Only (3, 2) of the four pairs favours a, so U = 1.
        assert mann_whitney_rank_biserial([1, 3], [2, 4]) == -0.5
        assert mann_whitney_rank_biserial([1, 2], [5, 6]) == -1.0

    def test_empty(self):
        with pytest.raises(EmptySample):
            mann_whitney_rank_biserial([], [1])

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.integers(0, 4), min_size=1, max_size=8), st.lists(st.integers(0, 4), min_size=1, max_size=8))
    def test_matches_pair_counting(self, a, b):
        u = sum(1.0 if x > y else 0.5 if x == y else 0.0 for x in a for y in b)
        assert math.isclose(mann_whitney_rank_biserial(a, b), 2 * u / (len(a) * len(b)) - 1)
