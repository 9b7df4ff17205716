"""Renderer-agnostic descriptions of diagnostic charts.

Each builder returns a :class:`PlotDataDocument`, a JSON object with the
keys ``kind``, ``axes``, ``series``, ``facets`` and ``metadata``. Series
carry their facet assignment so any plotting front end can draw them.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .data import unit_groups
from .errors import ValidationError

KINDS = (
    "pit-histogram",
    "wis-decomposition",
    "interval-coverage",
    "quantile-coverage",
    "heatmap",
    "availability",
    "correlation",
    "experiment",
)


def _clean(value):
    if isinstance(value, (float, np.floating)):
        return None if math.isnan(value) else float(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    return value


@dataclass
class PlotDataDocument:
    kind: str
    axes: dict
    series: list = field(default_factory=list)
    facets: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def to_dict(self):
        return _clean(
            {
                "kind": self.kind,
                "axes": self.axes,
                "series": self.series,
                "facets": self.facets,
                "metadata": self.metadata,
            }
        )

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)


def _facet_blocks(df, by):
    by = list(by)
    for key, idx in unit_groups(df, by).items():
        yield dict(zip(by, key)), df.iloc[idx]


def _facet_name(facet):
    return ", ".join(f"{k}={v}" for k, v in facet.items()) or "all"


def pit_histogram_document(hist, by=()):
    series, facets = [], []
    for facet, block in _facet_blocks(hist, by):
        facets.append(facet)
        series.append(
            {
                "name": _facet_name(facet),
                "facet": facet,
                "type": "bar",
                "bin_lower": block["bin_lower"].tolist(),
                "bin_upper": block["bin_upper"].tolist(),
                "y": block["mass"].tolist(),
            }
        )
    bins = len(series[0]["y"]) if series else 0
    return PlotDataDocument(
        "pit-histogram",
        {"x": {"label": "PIT", "range": [0.0, 1.0]}, "y": {"label": "mass"}},
        series,
        facets,
        {"reference": {"uniform_mass": 1.0 / bins if bins else None}},
    )


def wis_decomposition_document(scores, x="model", by=()):
    """Stacked-bar data of the three WIS components."""
    df = scores.data
    for col in ("dispersion", "overprediction", "underprediction"):
        if col not in df.columns:
            raise ValidationError(f"scores lack the '{col}' column; WIS decomposition needs quantile scores")
    series, facets = [], []
    for facet, block in _facet_blocks(df, by):
        facets.append(facet)
        grouped = block.groupby(x, sort=True)[["dispersion", "overprediction", "underprediction"]].mean()
        for comp in ("dispersion", "overprediction", "underprediction"):
            series.append(
                {
                    "name": comp,
                    "facet": facet,
                    "type": "stacked-bar",
                    "x": [str(v) for v in grouped.index],
                    "y": grouped[comp].tolist(),
                }
            )
    return PlotDataDocument(
        "wis-decomposition",
        {"x": {"label": x}, "y": {"label": "weighted interval score"}},
        series,
        facets,
        {"components": ["dispersion", "overprediction", "underprediction"]},
    )


def interval_coverage_document(coverage, by=()):
    series, facets = [], []
    for facet, block in _facet_blocks(coverage, by):
        facets.append(facet)
        series.append(
            {
                "name": _facet_name(facet),
                "facet": facet,
                "type": "line",
                "x": block["range"].tolist(),
                "y": (100.0 * block["coverage"]).tolist(),
            }
        )
    return PlotDataDocument(
        "interval-coverage",
        {"x": {"label": "nominal interval coverage (%)"}, "y": {"label": "empirical interval coverage (%)"}},
        series,
        facets,
        {"reference": "diagonal"},
    )


def quantile_coverage_document(coverage, by=()):
    series, facets = [], []
    for facet, block in _facet_blocks(coverage, by):
        facets.append(facet)
        series.append(
            {
                "name": _facet_name(facet),
                "facet": facet,
                "type": "line",
                "x": block["quantile"].tolist(),
                "y": block["coverage"].tolist(),
            }
        )
    return PlotDataDocument(
        "quantile-coverage",
        {"x": {"label": "quantile level"}, "y": {"label": "share of observations below quantile"}},
        series,
        facets,
        {"reference": "diagonal"},
    )


def heatmap_document(scores, x, y, metric):
    df = scores.data
    for col in (x, y, metric):
        if col not in df.columns:
            raise ValidationError(f"unknown column '{col}'")
    grid = df.groupby([y, x], sort=True)[metric].mean().unstack(x)
    return PlotDataDocument(
        "heatmap",
        {
            "x": {"label": x, "categories": [str(v) for v in grid.columns]},
            "y": {"label": y, "categories": [str(v) for v in grid.index]},
        },
        [{"name": metric, "type": "tile", "z": grid.to_numpy(dtype=float).tolist()}],
        [],
        {"metric": metric},
    )


def availability_document(available, x, y):
    grid = available.pivot_table(index=y, columns=x, values="n_forecasts", aggfunc="sum")
    grid = grid.sort_index().sort_index(axis=1)
    return PlotDataDocument(
        "availability",
        {
            "x": {"label": x, "categories": [str(v) for v in grid.columns]},
            "y": {"label": y, "categories": [str(v) for v in grid.index]},
        },
        [{"name": "n_forecasts", "type": "tile", "z": grid.to_numpy(dtype=float).tolist()}],
        [],
        {},
    )


def correlation_document(corr):
    return PlotDataDocument(
        "correlation",
        {
            "x": {"label": "metric", "categories": list(corr.metrics)},
            "y": {"label": "metric", "categories": list(corr.metrics)},
        },
        [{"name": "pearson", "type": "tile", "z": corr.matrix.tolist()}],
        [],
        {"lower_triangle_only": False},
    )


def experiment_document(result, x, y="mean", group="metric", band=None, title=None):
    """Line data for a simulation table, one series per ``group`` value."""
    series = []
    for facet, block in _facet_blocks(result, [group]):
        item = {
            "name": str(facet[group]),
            "facet": facet,
            "type": "line",
            "x": block[x].tolist(),
            "y": block[y].tolist(),
        }
        if band is not None:
            item["band"] = {"lower": block[band[0]].tolist(), "upper": block[band[1]].tolist()}
        if "truth" in block.columns:
            item["truth"] = block["truth"].tolist()
        series.append(item)
    return PlotDataDocument(
        "experiment",
        {"x": {"label": x}, "y": {"label": y}},
        series,
        [],
        {"title": title},
    )


def table_records(df):
    """Columns and rows of a DataFrame in a JSON-friendly form."""
    return {
        "columns": list(df.columns),
        "rows": [_clean(list(r)) for r in df.itertuples(index=False)],
    }


__all__ = [
    "KINDS",
    "PlotDataDocument",
    "availability_document",
    "correlation_document",
    "experiment_document",
    "heatmap_document",
    "interval_coverage_document",
    "pit_histogram_document",
    "quantile_coverage_document",
    "table_records",
    "wis_decomposition_document",
]
