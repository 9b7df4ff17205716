"""Scores for forecasts given as predictive quantiles or central intervals."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ScoringError, ValidationError

# levels are matched after rounding, so 0.1 pairs with 1 - 0.1 = 0.9000000000000001
_DECIMALS = 9


class WisComponents(NamedTuple):
    wis: float
    dispersion: float
    overprediction: float
    underprediction: float


@dataclass(frozen=True)
class QuantileForecast:
    """Predicted quantiles for one forecast, sorted by level."""

    levels: np.ndarray
    values: np.ndarray
    observed: float

    def __post_init__(self):
        levels = np.asarray(self.levels, dtype=float).ravel()
        values = np.asarray(self.values, dtype=float).ravel()
        if levels.size != values.size or levels.size == 0:
            raise ValidationError("levels and values must be non-empty and of equal length")
        order = np.argsort(levels, kind="mergesort")
        levels, values = levels[order], values[order]
        if np.any((levels <= 0) | (levels >= 1)):
            raise ValidationError("quantile levels must lie strictly between 0 and 1")
        if np.any(np.diff(levels) <= 0):
            raise ValidationError("quantile levels must be unique")
        if np.any(np.diff(values) < 0):
            raise ValidationError("quantile crossing: predicted values decrease with level")
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "observed", float(self.observed))

    def value_at(self, level):
        hit = np.flatnonzero(np.round(self.levels, _DECIMALS) == round(level, _DECIMALS))
        if hit.size == 0:
            raise ScoringError(f"quantile level {level:g} not present in forecast")
        return float(self.values[hit[0]])

    def has_level(self, level):
        return bool(np.any(np.round(self.levels, _DECIMALS) == round(level, _DECIMALS)))


def range_of(lower_level):
    """Nominal central coverage in percent of the interval starting at ``lower_level``."""
    return round(100.0 * (1.0 - 2.0 * lower_level), _DECIMALS - 2)


def central_intervals(levels):
    """Split a symmetric level set into central intervals.

    Returns
    -------
    intervals : list of (alpha, lower_index, upper_index)
        Sorted by decreasing alpha (narrowest interval first).
    median_index : int or None
    """
    levels = np.round(np.asarray(levels, dtype=float), _DECIMALS)
    index = {float(v): i for i, v in enumerate(levels)}
    median_index = index.get(0.5)
    intervals, unmatched = [], []
    for lvl, i in index.items():
        if lvl >= 0.5:
            continue
        partner = round(1.0 - lvl, _DECIMALS)
        if partner not in index:
            unmatched.append(lvl)
            continue
        intervals.append((round(2.0 * lvl, _DECIMALS), i, index[partner]))
    for lvl in index:
        if lvl > 0.5 and round(1.0 - lvl, _DECIMALS) not in index:
            unmatched.append(lvl)
    if unmatched:
        raise ScoringError(
            "quantile levels are not symmetric around 0.5; unmatched: "
            + ", ".join(f"{v:g}" for v in sorted(unmatched))
        )
    intervals.sort(key=lambda t: -t[0])
    return intervals, median_index


def interval_score(lower, upper, alpha, observed):
    """Interval score of the central (1 - alpha) prediction interval.

    An observation below the interval means the forecast was too high and
    is charged as overprediction; one above it is underprediction.
    """
    if lower > upper:
        raise ValidationError(f"quantile crossing: lower bound {lower} exceeds upper bound {upper}")
    if not 0 < alpha < 1:
        raise ScoringError("alpha must lie in (0, 1)")
    dispersion = upper - lower
    over = 2.0 / alpha * (lower - observed) if observed < lower else 0.0
    under = 2.0 / alpha * (observed - upper) if observed > upper else 0.0
    return WisComponents(dispersion + over + under, dispersion, over, under)


def wis(forecast):
    """Weighted interval score and its three additive components.

    Intervals are weighted by alpha / 2, the median by 1/2, and the total is
    divided by (K + 1/2) for K intervals (by K when no median is given).
    Distance of the median from the observation is counted as over- or
    under-prediction.
    """
    intervals, median_index = central_intervals(forecast.levels)
    y = forecast.observed
    values = forecast.values
    dispersion = over = under = 0.0
    for alpha, lo, hi in intervals:
        comp = interval_score(values[lo], values[hi], alpha, y)
        w = alpha / 2.0
        dispersion += w * comp.dispersion
        over += w * comp.overprediction
        under += w * comp.underprediction
    k = float(len(intervals))
    if median_index is not None:
        m = values[median_index]
        over += 0.5 * max(m - y, 0.0)
        under += 0.5 * max(y - m, 0.0)
        k += 0.5
    else:
        warnings.warn("no median given; WIS computed from intervals only", stacklevel=2)
    if k == 0:
        raise ScoringError("forecast has neither intervals nor a median")
    dispersion, over, under = dispersion / k, over / k, under / k
    return WisComponents(dispersion + over + under, dispersion, over, under)


def bias_quantile(forecast):
    """Bias in [-1, 1] from the position of the observation on the quantile grid.

    The observation is assigned the level of the predicted quantile it
    equals (largest such level on ties), or the midpoint of the two
    enclosing levels. Observations outside the predicted range map to -1
    (above every quantile) or +1 (below every quantile).
    """
    y = forecast.observed
    levels, values = forecast.levels, forecast.values
    if y > values[-1]:
        return -1.0
    if y < values[0]:
        return 1.0
    equal = np.flatnonzero(values == y)
    if equal.size:
        level = levels[equal[-1]]
    else:
        i = np.searchsorted(values, y, side="right") - 1
        level = 0.5 * (levels[i] + levels[i + 1])
    return float(1.0 - 2.0 * level)


def ae_median_quantile(forecast):
    if not forecast.has_level(0.5):
        raise ScoringError("ae_median needs the 0.5 quantile")
    return abs(forecast.value_at(0.5) - forecast.observed)


def interval_bounds(forecast, range_):
    lower_level = round((1.0 - range_ / 100.0) / 2.0, _DECIMALS)
    if not 0 < lower_level < 0.5:
        raise ScoringError(f"invalid interval range {range_:g}")
    if not (forecast.has_level(lower_level) and forecast.has_level(1.0 - lower_level)):
        raise ScoringError(f"interval range {range_:g} not available from the quantile levels")
    return forecast.value_at(lower_level), forecast.value_at(1.0 - lower_level)


def is_covered(forecast, range_):
    lo, hi = interval_bounds(forecast, range_)
    return lo <= forecast.observed <= hi


def available_ranges(forecast):
    intervals, _ = central_intervals(forecast.levels)
    return sorted(round(100.0 * (1.0 - a), _DECIMALS - 2) for a, _, _ in intervals)


def interval_coverage(forecasts, range_):
    """Share of forecasts whose central ``range_``% interval contains the observation."""
    forecasts = list(forecasts)
    if not forecasts:
        raise ScoringError("no forecasts given")
    return float(np.mean([is_covered(f, range_) for f in forecasts]))


def coverage_deviation(forecasts):
    """Mean over ranges of empirical minus nominal interval coverage."""
    forecasts = list(forecasts)
    if not forecasts:
        raise ScoringError("no forecasts given")
    ranges = set(available_ranges(forecasts[0]))
    for f in forecasts[1:]:
        ranges &= set(available_ranges(f))
    if not ranges:
        raise ScoringError("forecasts share no central interval")
    return float(np.mean([interval_coverage(forecasts, r) - r / 100.0 for r in sorted(ranges)]))


def quantile_coverage(forecasts, level):
    """Share of forecasts whose observation is at or below the ``level`` quantile."""
    forecasts = list(forecasts)
    if not forecasts:
        raise ScoringError("no forecasts given")
    return float(np.mean([f.observed <= f.value_at(level) for f in forecasts]))
