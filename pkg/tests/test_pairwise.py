import math

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from probscore.errors import ScoringError, ValidationError
from probscore.evaluation import ScoreTable, score
from probscore.pairwise import pairwise_comparison


def score_table(per_model, n_units=None, drop=None):
    """ScoreTable with one interval_score per (model, unit)."""
    rows = []
    for model, values in per_model.items():
        for unit, v in enumerate(values):
            if drop and (model, unit) in drop:
                continue
            rows.append({"unit": f"u{unit:03d}", "model": model, "interval_score": v})
    return ScoreTable.from_frame(pd.DataFrame(rows))


def ratio(result, a, b):
    p = result.pairs
    return p.loc[(p["model"] == a) & (p["compare_against"] == b), "mean_scores_ratio"].item()


def skill(result, col="relative_skill"):
    return dict(zip(result.per_model["model"], result.per_model[col]))


@pytest.fixture
def base_scores():
    return np.random.default_rng(8).gamma(2.0, 3.0, size=30)


def test_exact_ratios_and_scaled_skill(base_scores):
    res = pairwise_comparison(
        score_table({"A": base_scores, "B": 2 * base_scores, "C": 4 * base_scores}), "interval_score", baseline="A"
    )
    assert ratio(res, "B", "A") == 2.0
    assert ratio(res, "C", "A") == 4.0
    assert ratio(res, "C", "B") == 2.0
    scaled = skill(res, "scaled_rel_skill")
    assert scaled["A"] == 1.0
    assert scaled["B"] == pytest.approx(2.0, rel=1e-14)
    assert scaled["C"] == pytest.approx(4.0, rel=1e-14)
    # closed-form geometric means including the self-ratio
    rel = skill(res)
    assert rel["A"] == pytest.approx((1 * 0.5 * 0.25) ** (1 / 3))
    assert rel["B"] == pytest.approx((2 * 1 * 0.5) ** (1 / 3))


def test_identical_models(base_scores):
    res = pairwise_comparison(score_table({"A": base_scores, "B": base_scores.copy()}), "interval_score")
    assert (res.pairs["mean_scores_ratio"] == 1.0).all()
    assert (res.pairs["pval"] == 1.0).all()
    assert all(v == 1.0 for v in skill(res).values())


def test_self_pair(base_scores):
    res = pairwise_comparison(score_table({"A": base_scores, "B": base_scores * 1.3}), "interval_score")
    self_rows = res.pairs[res.pairs["model"] == res.pairs["compare_against"]]
    assert len(self_rows) == 2
    assert (self_rows[["mean_scores_ratio", "pval", "adj_pval"]] == 1.0).all().all()


@settings(max_examples=30, deadline=None)
@given(
    st.lists(st.floats(0.01, 100), min_size=5, max_size=20),
    st.lists(st.floats(0.01, 100), min_size=5, max_size=20),
    st.lists(st.floats(0.01, 100), min_size=5, max_size=20),
)
def test_reciprocal_identity(a, b, c):
    n = min(len(a), len(b), len(c))
    res = pairwise_comparison(score_table({"A": a[:n], "B": b[:n], "C": c[:n]}), "interval_score")
    for x in "ABC":
        for y in "ABC":
            assert abs(ratio(res, x, y) * ratio(res, y, x) - 1.0) <= 1e-12
    assert all(v > 0 for v in skill(res).values())


def test_baseline_scaled_is_one(base_scores):
    res = pairwise_comparison(score_table({"A": base_scores, "B": base_scores[::-1]}), "interval_score", baseline="B")
    assert skill(res, "scaled_rel_skill")["B"] == 1.0


def test_no_baseline_no_scaled_column(base_scores):
    res = pairwise_comparison(score_table({"A": base_scores, "B": base_scores * 2}), "interval_score")
    assert "scaled_rel_skill" not in res.per_model.columns


@settings(max_examples=30, deadline=None)
@given(st.floats(1.01, 20), st.sampled_from(["A", "B", "C", "D"]))
def test_scale_equivariance(c, target):
    g = np.random.default_rng(11)
    scores = {m: g.gamma(2.0, 1.0, size=25) for m in "ABCD"}
    before = pairwise_comparison(score_table(scores), "interval_score")
    scaled = dict(scores)
    scaled[target] = scores[target] * c
    after = pairwise_comparison(score_table(scaled), "interval_score")
    for other in "ABCD":
        if other != target:
            assert ratio(after, target, other) == pytest.approx(c * ratio(before, target, other), rel=1e-12)
    n = 4
    assert skill(after)[target] == pytest.approx(skill(before)[target] * c ** ((n - 1) / n), rel=1e-12)
    order_before = [m for m in sorted(skill(before), key=skill(before).get) if m != target]
    order_after = [m for m in sorted(skill(after), key=skill(after).get) if m != target]
    assert order_before == order_after


def test_ranking_matches_mean_score_on_complete_data():
    g = np.random.default_rng(4)
    base = g.gamma(2.0, 1.0, size=40)
    scores = {m: base * f for m, f in zip("ABCD", (1.7, 0.6, 1.2, 3.0))}
    res = pairwise_comparison(score_table(scores), "interval_score")
    by_skill = sorted(skill(res), key=skill(res).get)
    by_mean = sorted(scores, key=lambda m: scores[m].mean())
    assert by_skill == by_mean


def test_missing_forecasts_use_overlap(base_scores):
    drop = {("B", u) for u in range(10)}
    res = pairwise_comparison(
        score_table({"A": base_scores, "B": 2 * base_scores, "C": 4 * base_scores}, drop=drop), "interval_score"
    )
    assert ratio(res, "B", "A") == pytest.approx(2.0, rel=1e-14)
    overlap = res.pairs.set_index(["model", "compare_against"])["n_overlap"]
    assert overlap[("A", "B")] == 20 and overlap[("A", "C")] == 30 and overlap[("B", "B")] == 20
    expected = base_scores[10:].mean() * 2 / base_scores[10:].mean()
    assert ratio(res, "B", "A") == pytest.approx(expected)


def test_no_overlap_pair_omitted():
    a = [1.0, 2.0, 3.0, 4.0]
    drop = {("A", 2), ("A", 3), ("B", 0), ("B", 1)}
    res = pairwise_comparison(score_table({"A": a, "B": a, "C": a}, drop=drop), "interval_score", completeness=0.0)
    pairs = set(zip(res.pairs["model"], res.pairs["compare_against"]))
    assert ("A", "B") not in pairs and ("A", "C") in pairs


def test_isolated_model_has_no_skill():
    table = score_table({"A": [1.0, 2.0, 3.0], "B": [2.0, 2.0, 2.0], "C": [5.0, 5.0, 5.0]}, drop={("C", 0), ("C", 1), ("C", 2)})
    rows = table.data.copy()
    rows = pd.concat([rows, pd.DataFrame({"unit": ["u999"], "model": ["C"], "interval_score": [4.0]})], ignore_index=True)
    with pytest.warns(UserWarning, match="shares no forecasts"):
        res = pairwise_comparison(ScoreTable.from_frame(rows), "interval_score", completeness=0.0)
    assert math.isnan(skill(res)["C"])
    assert not math.isnan(skill(res)["A"])


def test_completeness_warning(base_scores):
    drop = {("B", u) for u in range(20)}
    with pytest.warns(UserWarning, match="only"):
        pairwise_comparison(score_table({"A": base_scores, "B": base_scores}, drop=drop), "interval_score")


def test_errors(base_scores):
    with pytest.raises(ScoringError, match="mixed signs"):
        pairwise_comparison(score_table({"A": base_scores, "B": -base_scores}), "interval_score")
    with pytest.raises(ValidationError, match="at least 2"):
        pairwise_comparison(score_table({"A": base_scores}), "interval_score")
    with pytest.raises(ValidationError, match="baseline"):
        pairwise_comparison(score_table({"A": base_scores, "B": base_scores}), "interval_score", baseline="Z")
    with pytest.raises(ValidationError):
        pairwise_comparison(score_table({"A": base_scores, "B": base_scores}), "interval_score", test="t")


def test_adjusted_pvalues_dominate(base_scores):
    g = np.random.default_rng(2)
    scores = {m: base_scores * g.uniform(0.8, 1.5, size=30) for m in "ABCD"}
    res = pairwise_comparison(score_table(scores), "interval_score")
    assert (res.pairs["adj_pval"] >= res.pairs["pval"] - 1e-15).all()


def test_permutation_test_deterministic(base_scores):
    table = score_table({"A": base_scores, "B": base_scores * 1.1, "C": base_scores[::-1]})
    a = pairwise_comparison(table, "interval_score", test="permutation", seed=5)
    b = pairwise_comparison(table, "interval_score", test="permutation", seed=5)
    assert a.to_json() == b.to_json()


def test_grouped_by_target(example_report):
    scores = score(example_report.cleaned)
    res = pairwise_comparison(scores, "interval_score", by=["target_type"], baseline="EuroCOVIDhub-baseline")
    assert set(res.per_model["target_type"]) == {"Cases", "Deaths"}
    cases = res.per_model[res.per_model["target_type"] == "Cases"]
    assert "UMass-MechBayes" not in set(cases["model"])
    assert (res.per_model.loc[res.per_model["model"] == "EuroCOVIDhub-baseline", "scaled_rel_skill"] == 1.0).all()
