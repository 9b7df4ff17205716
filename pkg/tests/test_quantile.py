import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from probscore import quantile as q
from probscore.data import HUB_LEVELS
from probscore.errors import ScoringError, ValidationError
from probscore.experiments import normal_crps


def pinball(tau, value, y):
    return ((y < value) - tau) * (value - y)


def wis_oracle(levels, values, y):
    """WIS through the pinball-loss identity: sum of quantile losses over (K + 1/2)."""
    levels = np.asarray(levels)
    k = np.sum(levels < 0.5)
    denom = k + (0.5 if np.any(np.isclose(levels, 0.5)) else 0.0)
    return sum(pinball(t, v, y) for t, v in zip(levels, values)) / denom


@st.composite
def symmetric_forecasts(draw):
    k = draw(st.integers(1, 8))
    lower = sorted(draw(st.lists(st.floats(0.01, 0.49), min_size=k, max_size=k, unique=True)))
    lower = sorted({round(v, 4) for v in lower})
    with_median = draw(st.booleans())
    levels = lower + ([0.5] if with_median else []) + [round(1 - v, 4) for v in reversed(lower)]
    increments = draw(st.lists(st.floats(0, 100), min_size=len(levels), max_size=len(levels)))
    start = draw(st.floats(-500, 500))
    values = start + np.cumsum(increments)
    y = draw(st.floats(-1000, 2000))
    return q.QuantileForecast(np.array(levels), values, y)


# --- interval score -------------------------------------------------------


def test_interval_score_inside():
    assert q.interval_score(0.0, 2.0, 0.5, 1.0) == (2.0, 2.0, 0.0, 0.0)


def test_interval_score_above_upper():
    comp = q.interval_score(0.0, 2.0, 0.5, 3.0)
    assert comp.dispersion == 2.0
    assert comp.underprediction == pytest.approx(4.0)
    assert comp.overprediction == 0.0
    assert comp.wis == pytest.approx(6.0)


def test_interval_score_below_lower_is_overprediction():
    comp = q.interval_score(0.0, 2.0, 0.5, -1.0)
    assert comp.overprediction == pytest.approx(4.0)
    assert comp.underprediction == 0.0


def test_interval_score_degenerate():
    assert q.interval_score(1.5, 1.5, 0.2, 1.5) == (0.0, 0.0, 0.0, 0.0)


def test_interval_score_crossing():
    with pytest.raises(ValidationError):
        q.interval_score(3.0, 2.0, 0.5, 1.0)


# --- WIS ------------------------------------------------------------------


def test_wis_single_interval_without_median():
    fc = q.QuantileForecast([0.25, 0.75], [0.0, 2.0], 1.0)
    with pytest.warns(UserWarning, match="median"):
        comp = q.wis(fc)
    assert comp.wis == pytest.approx(0.5)


def test_wis_degenerate_forecast():
    fc = q.QuantileForecast(HUB_LEVELS, [4.0] * 23, 4.0)
    assert q.wis(fc).wis == 0.0


def test_wis_median_only_equals_ae_median():
    fc = q.QuantileForecast([0.5], [10.0], 7.0)
    assert q.wis(fc).wis == pytest.approx(q.ae_median_quantile(fc)) == pytest.approx(3.0)


def test_wis_median_term_direction():
    high = q.wis(q.QuantileForecast([0.5], [10.0], 7.0))
    low = q.wis(q.QuantileForecast([0.5], [4.0], 7.0))
    assert high.overprediction > 0 and high.underprediction == 0
    assert low.underprediction > 0 and low.overprediction == 0


def test_wis_normal_99_levels_close_to_crps():
    levels = np.arange(1, 100) / 100
    values = stats.norm.ppf(levels, loc=0.0, scale=2.0)
    fc = q.QuantileForecast(levels, values, 1.3)
    assert q.wis(fc).wis == pytest.approx(normal_crps(0.0, 2.0, 1.3), rel=0.02)


def test_wis_asymmetric_levels_rejected():
    with pytest.raises(ScoringError, match="0.3"):
        q.wis(q.QuantileForecast([0.1, 0.3, 0.9], [1.0, 2.0, 3.0], 2.0))


@settings(max_examples=300, deadline=None)
@given(symmetric_forecasts())
def test_wis_matches_pinball_oracle(fc):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        comp = q.wis(fc)
    expected = wis_oracle(fc.levels, fc.values, fc.observed)
    assert comp.wis == pytest.approx(expected, rel=1e-9, abs=1e-9)


@settings(max_examples=300, deadline=None)
@given(symmetric_forecasts())
def test_wis_decomposition_identity(fc):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        comp = q.wis(fc)
    assert abs(comp.dispersion + comp.overprediction + comp.underprediction - comp.wis) <= 1e-12 * max(1.0, comp.wis)
    assert min(comp) >= 0.0


@settings(max_examples=200, deadline=None)
@given(st.floats(-100, 100), st.floats(0.01, 50), st.floats(0.01, 0.99), st.floats(0, 1), st.floats(0.01, 50))
def test_widening_interval_monotone(lower, width, alpha, pos, extra):
    upper = lower + width
    y = lower + pos * width
    narrow = q.interval_score(lower, upper, alpha, y)
    wide = q.interval_score(lower - extra, upper, alpha, y)
    assert wide.dispersion > narrow.dispersion
    assert wide.wis >= narrow.wis


def test_single_interval_penalises_one_side_only():
    for y in (-5.0, 0.5, 7.0):
        comp = q.interval_score(0.0, 1.0, 0.2, y)
        assert comp.overprediction == 0 or comp.underprediction == 0


# --- bias -----------------------------------------------------------------


def test_bias_quantile_examples():
    fc = lambda y: q.QuantileForecast([0.25, 0.5, 0.75], [1.0, 2.0, 3.0], y)  # noqa: E731
    assert q.bias_quantile(fc(10.0)) == -1.0
    assert q.bias_quantile(fc(-10.0)) == 1.0
    assert q.bias_quantile(fc(2.0)) == 0.0
    assert q.bias_quantile(fc(2.5)) == pytest.approx(-0.25)


def test_bias_quantile_ties_take_largest_level():
    fc = q.QuantileForecast([0.25, 0.5, 0.75], [1.0, 2.0, 2.0], 2.0)
    assert q.bias_quantile(fc) == pytest.approx(1 - 2 * 0.75)


@settings(max_examples=200, deadline=None)
@given(symmetric_forecasts())
def test_bias_quantile_bounded(fc):
    assert -1.0 <= q.bias_quantile(fc) <= 1.0


# --- coverage -------------------------------------------------------------


def _fc(y, levels=(0.05, 0.25, 0.5, 0.75, 0.95), values=(-2.0, -1.0, 0.0, 1.0, 2.0)):
    return q.QuantileForecast(list(levels), list(values), y)


def test_interval_coverage_inclusive():
    assert q.interval_coverage([_fc(-1.0), _fc(1.0), _fc(0.3)], 50) == 1.0
    assert q.interval_coverage([_fc(1.5), _fc(0.0)], 50) == 0.5


def test_range_of():
    assert q.range_of(0.25) == 50.0
    assert q.range_of(0.05) == 90.0
    assert q.available_ranges(_fc(0.0)) == [50.0, 90.0]


def test_quantile_coverage_all_below():
    fcs = [_fc(-10.0), _fc(-3.0)]
    for lvl in (0.05, 0.25, 0.5, 0.75, 0.95):
        assert q.quantile_coverage(fcs, lvl) == 1.0


def test_coverage_missing_range():
    with pytest.raises(ScoringError):
        q.interval_coverage([_fc(0.0)], 80)
    with pytest.raises(ScoringError):
        q.quantile_coverage([_fc(0.0)], 0.4)


def test_coverage_deviation_example():
    # covered at 50 and 90 -> (1 - 0.5 + 1 - 0.9) / 2
    assert q.coverage_deviation([_fc(0.0)]) == pytest.approx(0.3)
    # covered at 90 only -> (0 - 0.5 + 1 - 0.9) / 2
    assert q.coverage_deviation([_fc(1.5)]) == pytest.approx(-0.2)


def test_calibrated_coverage(rng):
    levels = np.array(HUB_LEVELS)
    values = stats.norm.ppf(levels)
    fcs = [q.QuantileForecast(levels, values, y) for y in rng.standard_normal(2000)]
    for r in q.available_ranges(fcs[0]):
        assert abs(q.interval_coverage(fcs, r) - r / 100) < 0.03


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.integers(-200, 200), min_size=5, max_size=5),
    st.integers(-220, 220),
    st.sampled_from([np.exp, np.arctan, lambda v: v**3 + v]),
)
def test_coverage_invariant_under_monotone_transform(raw, y, transform):
    # quarter-unit grid keeps each transform strictly increasing in floating point
    values = np.sort(np.asarray(raw, dtype=float)) / 4
    levels = [0.05, 0.25, 0.5, 0.75, 0.95]
    base = q.QuantileForecast(levels, values, y / 4)
    moved = q.QuantileForecast(levels, transform(values), transform(y / 4))
    for r in (50, 90):
        assert q.interval_coverage([base], r) == q.interval_coverage([moved], r)


# --- ae_median ------------------------------------------------------------


def test_ae_median():
    assert q.ae_median_quantile(_fc(0.0)) == 0.0
    assert q.ae_median_quantile(q.QuantileForecast([0.5], [10.0], 7.0)) == 3.0
    with pytest.raises(ScoringError):
        q.ae_median_quantile(q.QuantileForecast([0.25, 0.75], [1.0, 2.0], 1.0))


def test_quantile_forecast_rejects_crossing():
    with pytest.raises(ValidationError):
        q.QuantileForecast([0.25, 0.75], [2.0, 1.0], 1.0)
