import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats
from statsmodels.stats.multitest import multipletests

from probscore.significance import holm, permutation_test, rank_sum_test


def enumerated_rank_sum_p(x, y):
    """Two-sided exact p-value by listing every split of the pooled ranks."""
    pooled = np.concatenate([x, y])
    ranks = stats.rankdata(pooled)
    n1, n = len(x), len(pooled)
    centre = n1 * (n + 1) / 2
    observed = abs(ranks[:n1].sum() - centre)
    hits = total = 0
    for combo in itertools.combinations(range(n), n1):
        total += 1
        hits += abs(ranks[list(combo)].sum() - centre) >= observed - 1e-9
    return hits / total


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.integers(0, 6), min_size=1, max_size=6),
    st.lists(st.integers(0, 6), min_size=1, max_size=6),
)
def test_exact_rank_sum_matches_enumeration(x, y):
    x, y = np.asarray(x, float), np.asarray(y, float)
    pooled = np.concatenate([x, y])
    expected = 1.0 if np.all(pooled == pooled[0]) else enumerated_rank_sum_p(x, y)
    assert rank_sum_test(x, y) == pytest.approx(expected, abs=1e-12)


def test_exact_rank_sum_matches_scipy_without_ties(rng):
    x, y = rng.normal(size=8), rng.normal(0.8, 1, size=11)
    ref = stats.mannwhitneyu(x, y, alternative="two-sided", method="exact").pvalue
    assert rank_sum_test(x, y) == pytest.approx(ref, rel=1e-10)


def test_asymptotic_rank_sum_matches_scipy(rng):
    x = np.round(rng.normal(size=40), 1)
    y = np.round(rng.normal(0.3, 1, size=35), 1)
    ref = stats.mannwhitneyu(x, y, alternative="two-sided", method="asymptotic", use_continuity=True).pvalue
    assert rank_sum_test(x, y) == pytest.approx(ref, rel=1e-10)


def test_rank_sum_identical():
    assert rank_sum_test([1.0, 1.0, 1.0], [1.0, 1.0]) == 1.0
    x = np.arange(30.0)
    assert rank_sum_test(x, x) == 1.0


def test_permutation_reproducible_and_bounded():
    rng_values = np.random.default_rng(3)
    x = rng_values.gamma(2, size=30)
    y = 1.5 * x
    p1 = permutation_test(x, y, np.random.default_rng(9))
    p2 = permutation_test(x, y, np.random.default_rng(9))
    assert p1 == p2
    assert 1 / 10001 <= p1 < 0.01


def test_permutation_identical_scores():
    x = np.arange(1.0, 11.0)
    assert permutation_test(x, x, np.random.default_rng(0)) == 1.0


def test_permutation_null_not_significant():
    g = np.random.default_rng(5)
    x = g.gamma(2, size=50)
    y = g.permutation(x)
    assert permutation_test(x, y, np.random.default_rng(1)) > 0.05


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=15))
def test_holm_matches_statsmodels(pvals):
    ref = multipletests(pvals, method="holm")[1]
    np.testing.assert_allclose(holm(pvals), ref, rtol=1e-12, atol=1e-15)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=15))
def test_holm_properties(pvals):
    p = np.asarray(pvals)
    adj = holm(p)
    assert np.all(adj >= p)
    order = np.argsort(p, kind="mergesort")
    assert np.all(np.diff(adj[order]) >= 0)


def test_holm_nan_passthrough():
    out = holm([0.01, np.nan, 0.04])
    assert np.isnan(out[1])
    assert out[0] == pytest.approx(0.02)
