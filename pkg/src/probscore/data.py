"""Long-format forecast tables: ingestion, validation and reshaping.

A forecast table holds one row per predicted value. Four columns are
reserved (``true_value``, ``prediction``, ``quantile``, ``sample``); every
other column is an identifier, and the combination of identifier values
names one forecast (the *forecast unit*).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import IngestError, ValidationError

OBSERVED = "true_value"
PREDICTED = "prediction"
QUANTILE = "quantile"
SAMPLE = "sample"
RESERVED = (OBSERVED, PREDICTED, QUANTILE, SAMPLE)

FORMATS = ("sample", "quantile", "binary", "point", "mixed-quantile-point")
TARGET_TYPES = ("binary", "integer", "continuous")
NA_STRINGS = ("", "NA")

# 22 quantiles plus the median, as used by the European forecast hubs
HUB_LEVELS = (
    0.01, 0.025, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5,
    0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95, 0.975, 0.99,
)

MIN_SAMPLES_FOR_QUANTILES = 100


@dataclass(frozen=True)
class ForecastUnit:
    """Identifier columns whose value combination names a single forecast."""

    columns: tuple

    def __iter__(self):
        return iter(self.columns)

    def __len__(self):
        return len(self.columns)


@dataclass(frozen=True)
class ForecastTable:
    """A long-format forecast table.

    Attributes
    ----------
    data : pandas.DataFrame
        Identifier columns (strings) followed by the reserved numeric
        columns present for this format.
    format : str
        One of :data:`FORMATS`.
    target_type_guess : str
        One of :data:`TARGET_TYPES`.
    """

    data: pd.DataFrame
    format: str
    target_type_guess: str

    @property
    def identifiers(self):
        return [c for c in self.data.columns if c not in RESERVED]

    @property
    def forecast_unit(self):
        return ForecastUnit(tuple(self.identifiers))

    def __len__(self):
        return len(self.data)

    def equals(self, other):
        return (
            self.format == other.format
            and self.target_type_guess == other.target_type_guess
            and self.data.reset_index(drop=True).equals(other.data.reset_index(drop=True))
        )


@dataclass
class ValidationReport:
    target_type: str
    prediction_type: str
    forecast_unit: ForecastUnit
    unique_values: pd.DataFrame
    cleaned: ForecastTable
    messages: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    def to_dict(self):
        return {
            "target_type": self.target_type,
            "prediction_type": self.prediction_type,
            "forecast_unit": list(self.forecast_unit.columns),
            "unique_values": self.unique_values.to_dict(orient="records"),
            "messages": list(self.messages),
            "warnings": list(self.warnings),
        }


# --------------------------------------------------------------------------
# ingestion
# --------------------------------------------------------------------------


def _parse_numeric(raw, column):
    out = np.empty(len(raw), dtype=float)
    for i, value in enumerate(raw):
        value = value.strip()
        if value in NA_STRINGS:
            out[i] = np.nan
            continue
        try:
            out[i] = float(value)
        except ValueError:
            # +2: header line plus 1-based numbering
            raise IngestError(
                f"row {i + 2}: non-numeric value {value!r} in column '{column}'"
            ) from None
    return out


def _infer_format(df, hint=None):
    if SAMPLE in df.columns:
        fmt = "sample"
    elif QUANTILE in df.columns:
        is_point = df[QUANTILE].isna()
        if is_point.all():
            fmt = "point"
        elif is_point.any():
            fmt = "mixed-quantile-point"
        else:
            fmt = "quantile"
    elif hint in ("binary", "point"):
        fmt = hint
    else:
        obs = df[OBSERVED].dropna()
        pred = df[PREDICTED].dropna()
        looks_binary = obs.isin([0.0, 1.0]).all() and pred.between(0.0, 1.0).all()
        fmt = "binary" if looks_binary else "point"
    if hint is not None and hint != fmt:
        raise IngestError(f"format hint '{hint}' conflicts with the columns present (looks like '{fmt}')")
    return fmt


def _infer_target_type(observed, fmt):
    obs = np.asarray(observed, dtype=float)
    obs = obs[~np.isnan(obs)]
    if fmt == "binary" and np.isin(obs, (0.0, 1.0)).all():
        return "binary"
    if obs.size and np.all(obs == np.round(obs)):
        return "integer"
    return "continuous"


def from_frame(df, format=None):
    """Build a :class:`ForecastTable` from a DataFrame.

    Identifier columns are converted to strings; reserved columns to floats
    (``sample`` becomes a nullable integer).
    """
    for col in (OBSERVED, PREDICTED):
        if col not in df.columns:
            raise IngestError(f"missing mandatory column '{col}'")
    if QUANTILE in df.columns and SAMPLE in df.columns:
        raise IngestError("a table cannot have both 'quantile' and 'sample' columns")

    out = pd.DataFrame(index=range(len(df)))
    for col in df.columns:
        values = df[col].to_numpy()
        if col in RESERVED:
            out[col] = pd.to_numeric(pd.Series(values), errors="raise").astype(float)
        else:
            out[col] = pd.Series(values).astype(str)
    ids = [c for c in out.columns if c not in RESERVED]
    reserved = [c for c in RESERVED if c in out.columns]
    out = out[ids + reserved]
    if SAMPLE in out.columns:
        out[SAMPLE] = out[SAMPLE].astype("Int64")
    fmt = _infer_format(out, format)
    return ForecastTable(out, fmt, _infer_target_type(out[OBSERVED], fmt))


def ingest(source, format=None, delimiter=","):
    """Read a delimited forecast file.

    Parameters
    ----------
    source : str or path-like or file object
        Delimited text with a header row.
    format : {"binary", "point", ...}, optional
        Hint used when neither a ``quantile`` nor a ``sample`` column is
        present. Any other value must agree with the inferred format.
    delimiter : str
        Field separator.

    Returns
    -------
    ForecastTable
    """
    if isinstance(source, (str, Path)) and not Path(source).exists():
        raise IngestError(f"input file not found: {source}")
    try:
        raw = pd.read_csv(source, sep=delimiter, dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError:
        raise IngestError("input has no header row") from None
    raw.columns = [c.strip() for c in raw.columns]
    for col in (OBSERVED, PREDICTED):
        if col not in raw.columns:
            raise IngestError(f"missing mandatory column '{col}'")

    parsed = {}
    for col in raw.columns:
        if col in RESERVED:
            parsed[col] = _parse_numeric(raw[col].to_numpy(), col)
        else:
            parsed[col] = raw[col].to_numpy()
    return from_frame(pd.DataFrame(parsed, columns=list(raw.columns)), format=format)


def write_table(table, dest, delimiter=","):
    """Write a table so that :func:`ingest` reproduces it exactly."""
    df = table.data.copy()
    for col in (OBSERVED, PREDICTED, QUANTILE):
        if col in df.columns:
            df[col] = [("NA" if np.isnan(v) else repr(float(v))) for v in df[col]]
    if SAMPLE in df.columns:
        df[SAMPLE] = ["NA" if pd.isna(v) else str(int(v)) for v in df[SAMPLE]]
    df.to_csv(dest, index=False, sep=delimiter, lineterminator="\n")


# --------------------------------------------------------------------------
# validation
# --------------------------------------------------------------------------


def unit_groups(df, columns):
    """Map each distinct value combination of ``columns`` to its row positions.

    Keys are tuples; ordering is sorted and therefore deterministic.
    """
    columns = list(columns)
    if not columns:
        return {(): np.arange(len(df))}
    groups = df.groupby(columns, sort=True, dropna=False).indices
    if len(columns) == 1:
        return {(k,): v for k, v in groups.items()}
    return dict(groups)


def _describe_unit(columns, key):
    return ", ".join(f"{c}={v}" for c, v in zip(columns, key)) or "<single unit>"


def _duplicate_units(df, ids, extra):
    keys = ids + [extra] if extra else ids
    dup = df.duplicated(subset=keys, keep=False) if keys else pd.Series(len(df) > 1, index=df.index)
    if not dup.any():
        return []
    offending = df.loc[dup, ids].drop_duplicates()
    return [_describe_unit(ids, tuple(r)) for r in offending.itertuples(index=False)]


def validate(table):
    """Check a forecast table and return a cleaned copy plus diagnostics.

    Rows with a missing prediction or observation are dropped and the
    number of dropped values is recorded in ``messages``. Structural
    problems (duplicated forecasts, invalid quantile levels, crossing
    quantiles, out-of-range binary values) raise :class:`ValidationError`.
    """
    df = table.data
    if len(df) == 0:
        raise ValidationError("forecast table is empty")
    ids = table.identifiers
    messages, warns = [], []

    keep = np.ones(len(df), dtype=bool)
    for col in (PREDICTED, OBSERVED):
        missing = df[col].isna().to_numpy()
        if missing.any():
            messages.append(
                f"{int(missing.sum())} values for `{col}` are missing; "
                "the corresponding rows were removed."
            )
        keep &= ~missing
    df = df.loc[keep].reset_index(drop=True)
    if len(df) == 0:
        raise ValidationError("no rows left after removing missing values")

    fmt = table.format
    if fmt == "sample":
        if df[SAMPLE].isna().any():
            raise ValidationError("sample index missing in some rows")
        if (df[SAMPLE] < 1).any():
            raise ValidationError("sample indices must be >= 1")
        dupes = _duplicate_units(df, ids, SAMPLE)
        if dupes:
            raise ValidationError("duplicate sample indices within forecast units", dupes)
    elif fmt in ("quantile", "mixed-quantile-point", "point"):
        has_q = QUANTILE in df.columns
        q_rows = df[df[QUANTILE].notna()] if has_q else df.iloc[:0]
        p_rows = df[df[QUANTILE].isna()] if has_q else df
        bad = q_rows[(q_rows[QUANTILE] <= 0) | (q_rows[QUANTILE] >= 1)]
        if len(bad):
            raise ValidationError(
                "quantile levels must lie strictly between 0 and 1",
                sorted({repr(float(v)) for v in bad[QUANTILE]}),
            )
        dupes = _duplicate_units(q_rows, ids, QUANTILE) + _duplicate_units(p_rows, ids, None)
        if dupes:
            raise ValidationError("duplicate forecasts for the same unit and quantile level", dupes)
        crossing = []
        if len(q_rows):
            ordered = q_rows.sort_values(ids + [QUANTILE], kind="mergesort")
            for key, idx in unit_groups(ordered, ids).items():
                pred = ordered[PREDICTED].to_numpy()[idx]
                if np.any(np.diff(pred) < 0):
                    crossing.append(_describe_unit(ids, key))
        if crossing:
            raise ValidationError("predicted quantiles decrease with increasing level (quantile crossing)", crossing)
    elif fmt == "binary":
        if not df[OBSERVED].isin([0.0, 1.0]).all():
            raise ValidationError("binary forecasts need observed values in {0, 1}")
        if not df[PREDICTED].between(0.0, 1.0).all():
            raise ValidationError("binary forecasts need predicted probabilities in [0, 1]")
        dupes = _duplicate_units(df, ids, None)
        if dupes:
            raise ValidationError("duplicate binary forecasts for the same unit", dupes)

    if len(ids) == 0 and fmt in ("binary", "point") and len(df) > 1:
        raise ValidationError("no identifier columns: cannot tell forecasts apart")

    cleaned = ForecastTable(df, fmt, _infer_target_type(df[OBSERVED], fmt))

    if fmt == "sample":
        sizes = [len(v) for v in unit_groups(df, ids).values()]
        if min(sizes) < 2:
            warns.append("some forecasts consist of a single sample")

    return ValidationReport(
        target_type=cleaned.target_type_guess,
        prediction_type=fmt,
        forecast_unit=cleaned.forecast_unit,
        unique_values=_unique_values(df),
        cleaned=cleaned,
        messages=messages,
        warnings=warns,
    )


def _unique_values(df):
    if "model" in df.columns:
        counts = df.groupby("model", sort=True).nunique(dropna=True)
        return counts.reset_index()
    return df.nunique(dropna=True).to_frame().T


# --------------------------------------------------------------------------
# availability and reshaping
# --------------------------------------------------------------------------


def available_forecasts(table, by=()):
    """Count complete forecasts (not rows) per combination of ``by`` values.

    Returns
    -------
    pandas.DataFrame
        The ``by`` columns plus ``n_forecasts``, sorted by the ``by`` values.
    """
    by = list(by)
    ids = table.identifiers
    for col in by:
        if col not in ids:
            raise ValidationError(f"unknown column '{col}' (identifier columns: {', '.join(ids)})")
    units = table.data[ids].drop_duplicates()
    if not by:
        return pd.DataFrame({"n_forecasts": [len(units)]})
    counts = units.groupby(by, sort=True).size().rename("n_forecasts")
    return counts.reset_index()


def sample_to_quantile(table, levels=HUB_LEVELS):
    """Convert a sample-based table into a quantile-based one.

    Quantiles are the linearly interpolated order statistics of each
    forecast's samples.
    """
    if table.format != "sample":
        raise ValidationError(f"sample_to_quantile needs a sample-based table, got '{table.format}'")
    levels = np.asarray(levels, dtype=float)
    if levels.size == 0:
        raise ValidationError("no quantile levels given")
    if np.any((levels <= 0) | (levels >= 1)):
        raise ValidationError("quantile levels must lie strictly between 0 and 1")
    if np.any(np.diff(levels) <= 0):
        raise ValidationError("quantile levels must be sorted and unique")

    df = table.data
    ids = table.identifiers
    pred = df[PREDICTED].to_numpy(dtype=float)
    obs = df[OBSERVED].to_numpy(dtype=float)
    frames, small = [], 0
    for key, idx in unit_groups(df, ids).items():
        if idx.size < 2:
            raise ValidationError(f"forecast {_describe_unit(ids, key)} has fewer than 2 samples")
        small += idx.size < MIN_SAMPLES_FOR_QUANTILES
        q = np.quantile(pred[idx], levels, method="linear")
        block = {c: [v] * levels.size for c, v in zip(ids, key)}
        block[OBSERVED] = np.repeat(obs[idx[0]], levels.size)
        block[QUANTILE] = levels
        block[PREDICTED] = q
        frames.append(pd.DataFrame(block))
    if small:
        warnings.warn(
            f"{small} forecasts have fewer than {MIN_SAMPLES_FOR_QUANTILES} samples; "
            "estimated quantiles may be biased",
            stacklevel=2,
        )
    out = pd.concat(frames, ignore_index=True)[ids + [OBSERVED, PREDICTED, QUANTILE]]
    return ForecastTable(out, "quantile", table.target_type_guess)
