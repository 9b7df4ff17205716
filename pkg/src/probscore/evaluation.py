"""Scoring of whole forecast tables, summaries, coverage and PIT histograms."""

from __future__ import annotations

import json
import math
import re
import warnings
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from . import binary, quantile, sample
from .data import OBSERVED, PREDICTED, QUANTILE, unit_groups
from .errors import ScoringError, ScoringWarning, UnsupportedMetricError, ValidationError

DEFAULT_SEED = 20220204

SAMPLE_METRICS = ("crps", "log_score", "dss", "bias", "mad", "ae_median", "se_mean")
QUANTILE_METRICS = (
    "interval_score", "dispersion", "underprediction", "overprediction",
    "coverage_deviation", "bias", "ae_median",
)
BINARY_METRICS = ("brier_score", "log_score")
POINT_METRICS = ("ae_point", "se_point")

DISPATCH = {
    "sample": SAMPLE_METRICS,
    "quantile": QUANTILE_METRICS,
    "binary": BINARY_METRICS,
    "point": POINT_METRICS,
    "mixed-quantile-point": QUANTILE_METRICS + POINT_METRICS,
}

KNOWN_METRICS = frozenset(m for ms in DISPATCH.values() for m in ms)
COVERED_PREFIX = "covered_"
_COVERAGE_RE = re.compile(r"^coverage_\d+(\.\d+)?$")
_COVERED_RE = re.compile(r"^covered_\d+(\.\d+)?$")
PROPRIETY_SAFE = ("mean", "signif")


def range_label(range_):
    return f"{range_:g}"


def is_metric_column(name):
    return name in KNOWN_METRICS or bool(_COVERAGE_RE.match(name))


def is_flag_column(name):
    return bool(_COVERED_RE.match(name))


@dataclass
class ScoreTable:
    """Per-forecast scores.

    Attributes
    ----------
    data : pandas.DataFrame
        Identifier columns, then metric columns, then any ``covered_R``
        interval-coverage flags (0/1).
    forecast_unit : list of str
        Identifier columns present in ``data``.
    metrics : list of str
        Metric columns, in output order.
    """

    data: pd.DataFrame
    forecast_unit: list
    metrics: list
    flags: list = field(default_factory=list)

    @classmethod
    def from_frame(cls, df):
        metrics = [c for c in df.columns if is_metric_column(c)]
        flags = [c for c in df.columns if is_flag_column(c)]
        ids = [c for c in df.columns if c not in metrics and c not in flags]
        out = df.copy()
        for c in ids:
            out[c] = out[c].astype(str)
        for c in metrics + flags:
            out[c] = pd.to_numeric(out[c], errors="coerce").astype(float)
        return cls(out[ids + metrics + flags].reset_index(drop=True), ids, metrics, flags)

    @classmethod
    def read_csv(cls, source, delimiter=","):
        df = pd.read_csv(source, sep=delimiter, dtype=str, keep_default_na=False)
        return cls.from_frame(df)

    @classmethod
    def from_json(cls, text):
        payload = json.loads(text)
        df = pd.DataFrame(payload["rows"], columns=payload["columns"])
        return cls.from_frame(df)

    def to_csv(self, dest, delimiter=","):
        df = self.data.copy()
        for c in self.metrics + self.flags:
            df[c] = [_fmt(v) for v in df[c]]
        df.to_csv(dest, index=False, sep=delimiter, lineterminator="\n")

    def to_dict(self):
        columns = list(self.data.columns)
        rows = []
        for rec in self.data.itertuples(index=False):
            rows.append([_json_value(v) for v in rec])
        return {
            "forecast_unit": list(self.forecast_unit),
            "metrics": list(self.metrics),
            "columns": columns,
            "rows": rows,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1)


def _fmt(value):
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "NA"
    return repr(float(value))


def _json_value(value):
    if isinstance(value, (float, np.floating)):
        return None if math.isnan(value) else float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    return value


# --------------------------------------------------------------------------
# scoring
# --------------------------------------------------------------------------


def _resolve_metrics(fmt, target_type, metrics):
    available = list(DISPATCH[fmt])
    if fmt == "sample" and target_type == "integer":
        available.remove("log_score")
    if metrics is None:
        return available
    chosen = []
    for m in metrics:
        if m not in available:
            raise UnsupportedMetricError(f"metric '{m}' is not available for {fmt} forecasts with {target_type} target")
        chosen.append(m)
    return [m for m in available if m in chosen]


def _guarded(fn, failures, name):
    try:
        return fn()
    except ScoringError:
        failures[name] = failures.get(name, 0) + 1
        return math.nan


def _score_sample(df, ids, discrete, metrics):
    pred = df[PREDICTED].to_numpy(dtype=float)
    obs = df[OBSERVED].to_numpy(dtype=float)
    funcs = {
        "crps": lambda y, x: sample.crps_sample(y, x),
        "log_score": lambda y, x: sample.log_score_sample(y, x),
        "dss": lambda y, x: sample.dss_sample(y, x),
        "bias": lambda y, x: sample.bias_sample(y, x, discrete=discrete),
        "mad": lambda y, x: sample.mad_dispersion(x),
        "ae_median": lambda y, x: sample.ae_median_sample(y, x),
        "se_mean": lambda y, x: sample.se_mean_sample(y, x),
    }
    keys, rows, failures = [], [], {}
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ScoringWarning)
        for key, idx in unit_groups(df, ids).items():
            x, y = pred[idx], obs[idx[0]]
            keys.append(key)
            rows.append([_guarded(lambda f=funcs[m]: f(y, x), failures, m) for m in metrics])
    floored = sum(issubclass(w.category, ScoringWarning) for w in caught)
    if floored:
        warnings.warn(
            f"log_score: predictive density floored for {floored} forecasts", ScoringWarning, stacklevel=3
        )
    return keys, pd.DataFrame(rows, columns=metrics), [], failures


def quantile_forecasts(table):
    """Yield ``(unit_key, QuantileForecast)`` for every quantile forecast in ``table``."""
    df = table.data
    ids = table.identifiers
    qdf = df[df[QUANTILE].notna()] if QUANTILE in df.columns else df.iloc[:0]
    pred = qdf[PREDICTED].to_numpy(dtype=float)
    obs = qdf[OBSERVED].to_numpy(dtype=float)
    lev = qdf[QUANTILE].to_numpy(dtype=float)
    for key, idx in unit_groups(qdf, ids).items():
        yield key, quantile.QuantileForecast(lev[idx], pred[idx], obs[idx[0]])


def _score_quantile(table, metrics):
    keys, rows, flag_rows, failures = [], [], [], {}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for key, fc in quantile_forecasts(table):
            keys.append(key)
            comp = _guarded(lambda: quantile.wis(fc), failures, "interval_score")
            ranges = _guarded(lambda: quantile.available_ranges(fc), failures, "coverage")
            if isinstance(ranges, float):
                ranges = []
            flags = {range_label(r): float(quantile.is_covered(fc, r)) for r in ranges}
            flag_rows.append(flags)
            values = {
                "bias": quantile.bias_quantile(fc),
                "ae_median": _guarded(lambda: quantile.ae_median_quantile(fc), failures, "ae_median"),
                "coverage_deviation": (
                    float(np.mean([flags[range_label(r)] - r / 100.0 for r in ranges])) if ranges else math.nan
                ),
            }
            if isinstance(comp, float):
                values.update(interval_score=math.nan, dispersion=math.nan, underprediction=math.nan, overprediction=math.nan)
            else:
                values.update(
                    interval_score=comp.wis,
                    dispersion=comp.dispersion,
                    underprediction=comp.underprediction,
                    overprediction=comp.overprediction,
                )
            rows.append([values[m] for m in metrics])
    flag_cols = sorted({r for f in flag_rows for r in f}, key=float)
    flag_df = pd.DataFrame(
        [[f.get(r, math.nan) for r in flag_cols] for f in flag_rows],
        columns=[COVERED_PREFIX + r for r in flag_cols],
    )
    return keys, pd.DataFrame(rows, columns=metrics), flag_df, failures


def _score_point(df, ids, metrics):
    pdf = df[df[QUANTILE].isna()] if QUANTILE in df.columns else df
    keys = [tuple(r) for r in pdf[ids].itertuples(index=False)] if ids else [()] * len(pdf)
    err = pdf[PREDICTED].to_numpy(dtype=float) - pdf[OBSERVED].to_numpy(dtype=float)
    values = {"ae_point": np.abs(err), "se_point": err**2}
    return keys, pd.DataFrame({m: values[m] for m in metrics}, columns=metrics)


def _score_binary(df, ids, metrics):
    keys = [tuple(r) for r in df[ids].itertuples(index=False)] if ids else [()] * len(df)
    prob = df[PREDICTED].to_numpy(dtype=float)
    obs = df[OBSERVED].to_numpy(dtype=float)
    values = {}
    if "brier_score" in metrics:
        values["brier_score"] = binary.brier_score(prob, obs)
    if "log_score" in metrics:
        values["log_score"] = binary.log_score_binary(prob, obs)
    return keys, pd.DataFrame({m: np.atleast_1d(values[m]) for m in metrics}, columns=metrics)


def _keys_frame(keys, ids):
    return pd.DataFrame([list(k) for k in keys], columns=ids, dtype=str) if ids else pd.DataFrame(index=range(len(keys)))


def score(table, seed=DEFAULT_SEED, metrics=None):
    """Score every forecast in a validated table.

    Metrics are chosen from the table's format (see :data:`DISPATCH`).
    A metric that cannot be computed for a single forecast (for example
    the DSS of a zero-variance sample) is set to NaN and reported in one
    :class:`~probscore.errors.ScoringWarning`.

    Parameters
    ----------
    table : ForecastTable
    seed : int
        Accepted for a uniform interface; none of the per-forecast
        metrics are random.
    metrics : list of str, optional
        Subset of the metrics available for the format.

    Returns
    -------
    ScoreTable
        One row per forecast, sorted by the identifier values.
    """
    if table.format not in DISPATCH:
        raise ValidationError(f"cannot score forecasts of format '{table.format}'")
    ids = table.identifiers
    fmt = table.format
    chosen = _resolve_metrics(fmt, table.target_type_guess, metrics)
    df = table.data
    failures = {}
    flags = pd.DataFrame()

    if fmt == "sample":
        keys, values, _, failures = _score_sample(df, ids, table.target_type_guess == "integer", chosen)
    elif fmt == "binary":
        keys, values = _score_binary(df, ids, chosen)
    elif fmt == "point":
        keys, values = _score_point(df, ids, chosen)
    else:
        q_metrics = [m for m in chosen if m in QUANTILE_METRICS]
        p_metrics = [m for m in chosen if m in POINT_METRICS]
        keys, values, flags, failures = _score_quantile(table, q_metrics)
        out = pd.concat([_keys_frame(keys, ids), values, flags], axis=1)
        if p_metrics and fmt == "mixed-quantile-point":
            pkeys, pvalues = _score_point(df, ids, p_metrics)
            point = pd.concat([_keys_frame(pkeys, ids), pvalues], axis=1)
            out = out.merge(point, on=ids, how="outer") if ids else pd.concat([out, point], axis=1)
            out = out.sort_values(ids, kind="mergesort").reset_index(drop=True) if ids else out
        flag_cols = list(flags.columns)
        _report_failures(failures)
        return ScoreTable(out[ids + chosen + flag_cols], list(ids), chosen, flag_cols)

    _report_failures(failures)
    out = pd.concat([_keys_frame(keys, ids), values], axis=1)
    if ids:
        out = out.sort_values(ids, kind="mergesort").reset_index(drop=True)
    return ScoreTable(out, list(ids), chosen, [])


def _report_failures(failures):
    if failures:
        detail = ", ".join(f"{m}: {n}" for m, n in sorted(failures.items()))
        warnings.warn(f"some scores could not be computed and were set to NaN ({detail})", ScoringWarning, stacklevel=3)


# --------------------------------------------------------------------------
# summaries
# --------------------------------------------------------------------------


def signif(x, digits=2):
    """Round to ``digits`` significant digits (elementwise)."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        mag = np.where(x == 0, 0, np.floor(np.log10(np.abs(x))))
    factor = 10.0 ** (digits - 1 - mag)
    out = np.where(np.isfinite(x) & (x != 0), np.round(x * factor) / factor, x)
    return float(out) if out.ndim == 0 else out


_AGGREGATORS = {
    "mean": np.nanmean,
    "median": np.nanmedian,
    "sum": np.nansum,
    "min": np.nanmin,
    "max": np.nanmax,
}


def _check_columns(scores, by):
    for col in by:
        if col not in scores.forecast_unit:
            raise ValidationError(f"unknown column '{col}' (identifier columns: {', '.join(scores.forecast_unit)})")


def summarise_scores(scores, by=None, fun="mean", digits=2):
    """Aggregate scores within each combination of ``by`` values.

    Parameters
    ----------
    scores : ScoreTable
    by : list of str, optional
        Grouping columns; defaults to the full forecast unit.
    fun : {"mean", "median", "sum", "min", "max", "signif"} or callable
        ``"signif"`` takes the group mean and rounds it to ``digits``
        significant digits. Aggregators other than the mean can make a
        proper score improper; a warning says so.

    Returns
    -------
    ScoreTable
        One row per group; ``covered_R`` flags are dropped.
    """
    by = list(scores.forecast_unit if by is None else by)
    _check_columns(scores, by)
    name = fun if isinstance(fun, str) else getattr(fun, "__name__", "custom")
    if isinstance(fun, str):
        if fun == "signif":
            agg = lambda v: signif(np.nanmean(v) if np.any(~np.isnan(v)) else np.nan, digits)  # noqa: E731
        elif fun in _AGGREGATORS:
            agg = _AGGREGATORS[fun]
        else:
            raise ValidationError(f"unknown summary function '{fun}'")
    else:
        agg = fun
    if name not in PROPRIETY_SAFE:
        warnings.warn(
            f"summarising with '{name}' instead of the mean: averages of proper scores stay proper, "
            "other summaries may not",
            UserWarning,
            stacklevel=2,
        )

    df = scores.data
    metrics = list(scores.metrics)
    rows = []
    for key, idx in unit_groups(df, by).items():
        block = df.iloc[idx]
        values = []
        for m in metrics:
            v = block[m].to_numpy(dtype=float)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                values.append(float(agg(v)) if np.any(~np.isnan(v)) else math.nan)
        rows.append(list(key) + values)
    out = pd.DataFrame(rows, columns=by + metrics)
    return ScoreTable(out, by, metrics, [])


def add_coverage(scores, ranges, by):
    """Attach empirical interval coverage per ``by`` group as ``coverage_R`` columns.

    Every row receives its group's coverage, so a later
    :func:`summarise_scores` over the same (or a finer) grouping carries
    the values through unchanged.
    """
    by = list(by)
    _check_columns(scores, by)
    df = scores.data.copy()
    metrics = list(scores.metrics)
    groups = unit_groups(df, by)
    for r in ranges:
        label = range_label(float(r))
        flag = COVERED_PREFIX + label
        if flag not in df.columns:
            raise ScoringError(f"interval range {label} cannot be formed from the quantile levels in these scores")
        col = np.full(len(df), math.nan)
        values = df[flag].to_numpy(dtype=float)
        for idx in groups.values():
            v = values[idx]
            col[idx] = np.nanmean(v) if np.any(~np.isnan(v)) else math.nan
        name = f"coverage_{label}"
        df[name] = col
        if name not in metrics:
            metrics.append(name)
    cols = scores.forecast_unit + metrics + scores.flags
    return ScoreTable(df[cols], list(scores.forecast_unit), metrics, list(scores.flags))


@dataclass
class CorrelationMatrix:
    metrics: list
    matrix: np.ndarray

    def to_frame(self):
        return pd.DataFrame(self.matrix, index=self.metrics, columns=self.metrics)

    def to_dict(self):
        return {
            "metrics": list(self.metrics),
            "matrix": [[_json_value(v) for v in row] for row in self.matrix],
        }


def correlation(scores, metrics=None):
    """Pearson correlation between metrics across rows.

    Entries involving a constant metric are undefined and returned as NaN
    (``null`` in JSON).
    """
    metrics = list(scores.metrics if metrics is None else metrics)
    for m in metrics:
        if m not in scores.data.columns:
            raise ValidationError(f"unknown metric '{m}'")
    if len(scores.data) < 3:
        raise ScoringError("correlation needs at least 3 rows")
    values = scores.data[metrics].to_numpy(dtype=float)
    k = len(metrics)
    mat = np.full((k, k), math.nan)
    for i in range(k):
        for j in range(i, k):
            ok = ~np.isnan(values[:, i]) & ~np.isnan(values[:, j])
            a, b = values[ok, i], values[ok, j]
            if a.size < 3 or np.ptp(a) == 0 or np.ptp(b) == 0:
                continue
            r = float(np.clip(np.corrcoef(a, b)[0, 1], -1.0, 1.0))
            mat[i, j] = mat[j, i] = 1.0 if i == j else r
    return CorrelationMatrix(metrics, mat)


# --------------------------------------------------------------------------
# PIT
# --------------------------------------------------------------------------


def pit_values(table, seed=DEFAULT_SEED):
    """One PIT value per sample forecast (randomised for integer targets)."""
    if table.format != "sample":
        raise ValidationError("PIT values need a sample-based table; quantile tables use pit_histogram")
    ids = table.identifiers
    df = table.data
    pred = df[PREDICTED].to_numpy(dtype=float)
    obs = df[OBSERVED].to_numpy(dtype=float)
    discrete = table.target_type_guess == "integer"
    rng = np.random.default_rng(seed)
    keys, pit = [], []
    for key, idx in unit_groups(df, ids).items():
        keys.append(key)
        pit.append(sample.pit_value(obs[idx[0]], pred[idx], rng, discrete=discrete))
    out = _keys_frame(keys, ids)
    out["pit_value"] = pit
    return out


def _quantile_pit_mass(fc, edges):
    """Spread one observation's PIT uniformly over the level gap containing it."""
    levels, values, y = fc.levels, fc.values, fc.observed
    grid = np.concatenate([[0.0], levels, [1.0]])
    # position of y among predicted quantiles; equal values count as covered
    below = int(np.searchsorted(values, y, side="left"))
    lo, hi = grid[below], grid[below + 1]
    if hi <= lo:
        mass = np.zeros(len(edges) - 1)
        mass[min(np.searchsorted(edges, lo, side="right") - 1, len(mass) - 1)] = 1.0
        return mass
    overlap = np.clip(np.minimum(edges[1:], hi) - np.maximum(edges[:-1], lo), 0.0, None)
    return overlap / (hi - lo)


def pit_histogram(table, by=(), bins=10, seed=DEFAULT_SEED):
    """Normalised PIT histogram per ``by`` group.

    Sample forecasts contribute one PIT value each. Quantile forecasts
    contribute their PIT as a uniform mass over the gap between the two
    quantile levels that bracket the observation.

    Returns
    -------
    pandas.DataFrame
        ``by`` columns, ``bin_lower``, ``bin_upper`` and ``mass``; masses
        sum to 1 within each group.
    """
    if bins < 2:
        raise ValidationError("a PIT histogram needs at least 2 bins")
    by = list(by)
    ids = table.identifiers
    for col in by:
        if col not in ids:
            raise ValidationError(f"unknown column '{col}'")
    edges = np.linspace(0.0, 1.0, bins + 1)

    if table.format == "sample":
        pits = pit_values(table, seed)
        per_unit = []
        for v in pits["pit_value"].to_numpy():
            mass = np.zeros(bins)
            mass[min(int(np.searchsorted(edges, v, side="right")) - 1, bins - 1)] = 1.0
            per_unit.append(mass)
        units = pits[ids] if ids else pd.DataFrame(index=pits.index)
    elif table.format in ("quantile", "mixed-quantile-point"):
        keys, per_unit = [], []
        for key, fc in quantile_forecasts(table):
            keys.append(key)
            per_unit.append(_quantile_pit_mass(fc, edges))
        units = _keys_frame(keys, ids)
    else:
        raise ValidationError(f"PIT histograms need sample or quantile forecasts, not '{table.format}'")

    per_unit = np.asarray(per_unit)
    rows = []
    for key, idx in unit_groups(units, by).items():
        mass = per_unit[idx].sum(axis=0)
        mass = mass / mass.sum()
        for b in range(bins):
            rows.append(list(key) + [edges[b], edges[b + 1], float(mass[b])])
    return pd.DataFrame(rows, columns=by + ["bin_lower", "bin_upper", "mass"])


# --------------------------------------------------------------------------
# calibration curves
# --------------------------------------------------------------------------


def _grouped_quantile_forecasts(table, by):
    by = list(by)
    ids = table.identifiers
    for col in by:
        if col not in ids:
            raise ValidationError(f"unknown column '{col}'")
    positions = [ids.index(c) for c in by]
    groups = {}
    for key, fc in quantile_forecasts(table):
        groups.setdefault(tuple(key[p] for p in positions), []).append(fc)
    return by, dict(sorted(groups.items()))


def coverage_by_range(table, by=()):
    """Empirical vs. nominal central-interval coverage per ``by`` group."""
    by, groups = _grouped_quantile_forecasts(table, by)
    rows = []
    for key, fcs in groups.items():
        ranges = set(quantile.available_ranges(fcs[0]))
        for f in fcs[1:]:
            ranges &= set(quantile.available_ranges(f))
        for r in sorted(ranges):
            rows.append(list(key) + [r, quantile.interval_coverage(fcs, r)])
    return pd.DataFrame(rows, columns=by + ["range", "coverage"])


def coverage_by_level(table, by=()):
    """Share of observations at or below each predicted quantile, per ``by`` group."""
    by, groups = _grouped_quantile_forecasts(table, by)
    rows = []
    for key, fcs in groups.items():
        levels = set(np.round(fcs[0].levels, 9))
        for f in fcs[1:]:
            levels &= set(np.round(f.levels, 9))
        for lvl in sorted(levels):
            rows.append(list(key) + [float(lvl), quantile.quantile_coverage(fcs, float(lvl))])
    return pd.DataFrame(rows, columns=by + ["quantile", "coverage"])
