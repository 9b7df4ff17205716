"""Pairwise model tournaments and relative skill."""

from __future__ import annotations

import itertools
import json
import math
import warnings
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .data import unit_groups
from .errors import ScoringError, ValidationError
from .evaluation import DEFAULT_SEED, _json_value
from .significance import holm, permutation_test, rank_sum_test

TESTS = ("wilcoxon", "permutation")
PAIR_COLUMNS = ["model", "compare_against", "mean_scores_ratio", "pval", "adj_pval", "n_overlap"]
MODEL_COLUMNS = ["model", "relative_skill", "scaled_rel_skill"]


@dataclass
class PairwiseResult:
    """Outcome of a pairwise tournament, one block of rows per group.

    Attributes
    ----------
    pairs : pandas.DataFrame
        ``by`` columns followed by :data:`PAIR_COLUMNS`; one row per ordered
        pair with overlapping forecasts, self-pairs included.
    per_model : pandas.DataFrame
        ``by`` columns, ``model``, ``relative_skill`` and, when a baseline
        was given, ``scaled_rel_skill``.
    """

    pairs: pd.DataFrame
    per_model: pd.DataFrame
    by: list
    metric: str
    baseline: str | None = None

    def to_dict(self):
        def records(df):
            return {
                "columns": list(df.columns),
                "rows": [[_json_value(v) for v in rec] for rec in df.itertuples(index=False)],
            }

        return {
            "metric": self.metric,
            "by": list(self.by),
            "baseline": self.baseline,
            "pairs": records(self.pairs),
            "per_model": records(self.per_model),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1)


def _check_sign(values, metric):
    v = values[~np.isnan(values)]
    if np.any(v > 0) and np.any(v < 0):
        raise ScoringError(f"scores of '{metric}' have mixed signs; pairwise ratios are undefined")


def _ratio(a, b):
    ma, mb = np.mean(a), np.mean(b)
    if mb == 0:
        return 1.0 if ma == 0 else math.inf
    return float(ma / mb)


def _tournament(wide, test, rng, completeness, group_label):
    models = list(wide.columns)
    present = {m: ~np.isnan(wide[m].to_numpy(dtype=float)) for m in models}
    values = {m: wide[m].to_numpy(dtype=float) for m in models}
    n_units = len(wide)
    for m in models:
        share = present[m].sum() / n_units
        if share < completeness:
            warnings.warn(
                f"{group_label}model '{m}' has forecasts for only {share:.0%} of targets; "
                "relative skill may be unreliable",
                stacklevel=3,
            )

    pvals = {}
    for a, b in itertools.combinations(models, 2):
        both = present[a] & present[b]
        if not both.any():
            continue
        xa, xb = values[a][both], values[b][both]
        if test == "wilcoxon":
            p = rank_sum_test(xa, xb)
        else:
            p = permutation_test(xa, xb, rng)
        pvals[(a, b)] = p
    keys = list(pvals)
    adjusted = dict(zip(keys, holm([pvals[k] for k in keys])))

    rows = []
    for a in models:
        for b in models:
            if a == b:
                rows.append([a, b, 1.0, 1.0, 1.0, int(present[a].sum())])
                continue
            key = (a, b) if (a, b) in pvals else (b, a)
            if key not in pvals:
                continue
            both = present[a] & present[b]
            rows.append([a, b, _ratio(values[a][both], values[b][both]), pvals[key], adjusted[key], int(both.sum())])
    pairs = pd.DataFrame(rows, columns=PAIR_COLUMNS)

    skill = {}
    for m in models:
        ratios = pairs.loc[pairs["model"] == m, "mean_scores_ratio"].to_numpy(dtype=float)
        if ratios.size <= 1:
            warnings.warn(f"{group_label}model '{m}' shares no forecasts with any other model", stacklevel=3)
            skill[m] = math.nan
        elif np.any(ratios <= 0) or not np.all(np.isfinite(ratios)):
            skill[m] = math.nan
        else:
            skill[m] = float(np.exp(np.mean(np.log(ratios))))
    return pairs, skill


def pairwise_comparison(
    scores,
    metric,
    by=(),
    baseline=None,
    test="wilcoxon",
    seed=DEFAULT_SEED,
    model_column="model",
    completeness=0.5,
):
    """Compare every pair of models on their overlapping forecasts.

    For each group of ``by`` values, the ratio of mean scores is computed
    for every ordered model pair on the forecasts both models made. A
    model's relative skill is the geometric mean of its ratios against
    all models it overlaps with, itself included (ratio 1). With a
    ``baseline`` the relative skills are divided by the baseline's.

    Parameters
    ----------
    scores : ScoreTable
        Unsummarised scores, one row per forecast.
    metric : str
        Score column to compare; all its values must share one sign.
    by : list of str
        Grouping columns (``model`` is excluded automatically).
    test : {"wilcoxon", "permutation"}
        Test used for the per-pair p-values; adjusted p-values use Holm's
        method within each group.
    completeness : float
        Models covering a smaller share of a group's targets trigger a
        warning.
    """
    if test not in TESTS:
        raise ValidationError(f"unknown test '{test}' (choose from {', '.join(TESTS)})")
    if metric not in scores.data.columns:
        raise ValidationError(f"unknown metric '{metric}'")
    if model_column not in scores.forecast_unit:
        raise ValidationError(f"scores have no '{model_column}' column")
    by = [c for c in by if c != model_column]
    for col in by:
        if col not in scores.forecast_unit:
            raise ValidationError(f"unknown column '{col}'")

    df = scores.data
    values = df[metric].to_numpy(dtype=float)
    _check_sign(values, metric)
    target_cols = [c for c in scores.forecast_unit if c != model_column]
    rng = np.random.default_rng(seed)

    pair_frames, model_frames = [], []
    for key, idx in unit_groups(df, by).items():
        block = df.iloc[idx]
        # several rows per forecast (e.g. per quantile) collapse to their mean
        wide = block.groupby(target_cols + [model_column], sort=True)[metric].mean().unstack(model_column)
        wide = wide.reindex(sorted(wide.columns), axis=1)
        label = ("[" + ", ".join(f"{c}={v}" for c, v in zip(by, key)) + "] ") if by else ""
        if wide.shape[1] < 2:
            raise ValidationError(f"{label}pairwise comparison needs at least 2 models")
        if baseline is not None and baseline not in wide.columns:
            raise ValidationError(f"{label}baseline model '{baseline}' not present")
        pairs, skill = _tournament(wide, test, rng, completeness, label)

        per_model = pd.DataFrame({"model": list(skill), "relative_skill": list(skill.values())})
        if baseline is not None:
            per_model["scaled_rel_skill"] = per_model["relative_skill"] / skill[baseline]
        for i, col in enumerate(by):
            pairs.insert(i, col, key[i])
            per_model.insert(i, col, key[i])
        pair_frames.append(pairs)
        model_frames.append(per_model)

    pairs = pd.concat(pair_frames, ignore_index=True)
    per_model = pd.concat(model_frames, ignore_index=True)
    pairs = pairs.rename(columns={"model": model_column}) if model_column != "model" else pairs
    return PairwiseResult(pairs, per_model, by, metric, baseline)
