"""Two-sample tests used to compare the scores of two models."""

from __future__ import annotations

import math

import numpy as np
from scipy import stats

EXACT_MAX_N = 20
PERMUTATION_RESAMPLES = 10_000
_CHUNK = 1_000


def _exact_rank_sum_pvalue(doubled_ranks, n1, observed):
    """Two-sided exact p-value of the rank sum of the first ``n1`` items.

    ``doubled_ranks`` are 2x the mid-ranks so that ties stay integral;
    counts[k, s] is the number of size-k subsets with doubled rank sum s.
    """
    total = int(doubled_ranks.sum())
    counts = np.zeros((n1 + 1, total + 1), dtype=np.float64)
    counts[0, 0] = 1.0
    for r in doubled_ranks:
        r = int(r)
        for k in range(n1, 0, -1):
            counts[k, r:] += counts[k - 1, : total + 1 - r]
    dist = counts[n1]
    n_all = doubled_ranks.size
    centre = n1 * (n_all + 1)  # expected doubled rank sum
    sums = np.arange(total + 1)
    extreme = np.abs(sums - centre) >= abs(observed - centre)
    return float(min(1.0, dist[extreme].sum() / dist.sum()))


def rank_sum_test(x, y):
    """Two-sided Wilcoxon rank-sum (Mann-Whitney U) p-value.

    Exact enumeration (mid-ranks for ties) when both samples have at most
    20 values, otherwise the normal approximation with tie and continuity
    correction.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n1, n2 = x.size, y.size
    if n1 == 0 or n2 == 0:
        return math.nan
    pooled = np.concatenate([x, y])
    if np.all(pooled == pooled[0]):
        return 1.0
    ranks = stats.rankdata(pooled)
    if max(n1, n2) <= EXACT_MAX_N:
        doubled = np.rint(2 * ranks).astype(np.int64)
        return _exact_rank_sum_pvalue(doubled, n1, int(doubled[:n1].sum()))

    n = n1 + n2
    u = ranks[:n1].sum() - n1 * (n1 + 1) / 2.0
    _, tie_counts = np.unique(pooled, return_counts=True)
    tie_term = np.sum(tie_counts**3 - tie_counts) / (n * (n - 1))
    sd = math.sqrt(n1 * n2 / 12.0 * ((n + 1) - tie_term))
    diff = u - n1 * n2 / 2.0
    z = (abs(diff) - 0.5) / sd if abs(diff) > 0.5 else 0.0
    return float(min(1.0, 2.0 * stats.norm.sf(z)))


def permutation_test(x, y, rng, resamples=PERMUTATION_RESAMPLES):
    """Paired permutation test for a difference in mean score.

    Each resample swaps a random subset of pairs (x_i, y_i), which inverts
    those pairs' score ratios. With the pooled total fixed, the ratio of
    means is monotone in sum(x) - sum(y), so the sign-flipped paired
    difference is used as the test statistic.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size != y.size:
        raise ValueError("paired permutation test needs equal-length inputs")
    if x.size == 0:
        return math.nan
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    d = x - y
    observed = abs(d.sum())
    tol = 1e-12 * max(1.0, np.abs(d).sum())
    hits = 0
    done = 0
    while done < resamples:
        m = min(_CHUNK, resamples - done)
        signs = gen.integers(0, 2, size=(m, d.size)) * 2 - 1
        hits += int(np.count_nonzero(np.abs(signs @ d) >= observed - tol))
        done += m
    return (hits + 1) / (resamples + 1)


def holm(pvalues):
    """Holm step-down adjusted p-values (NaNs pass through)."""
    p = np.asarray(pvalues, dtype=float)
    out = np.full_like(p, np.nan)
    ok = ~np.isnan(p)
    vals = p[ok]
    m = vals.size
    if m == 0:
        return out
    order = np.argsort(vals, kind="mergesort")
    scaled = (m - np.arange(m)) * vals[order]
    adjusted = np.minimum(np.maximum.accumulate(scaled), 1.0)
    res = np.empty(m)
    res[order] = adjusted
    out[ok] = res
    return out
