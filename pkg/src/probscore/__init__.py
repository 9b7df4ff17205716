"""Evaluation of probabilistic forecasts with proper scoring rules."""

from importlib import resources

from .data import (
    HUB_LEVELS,
    ForecastTable,
    ForecastUnit,
    ValidationReport,
    available_forecasts,
    from_frame,
    ingest,
    sample_to_quantile,
    validate,
    write_table,
)
from .errors import (
    IngestError,
    ProbscoreError,
    ScoringError,
    ScoringWarning,
    UnsupportedMetricError,
    ValidationError,
)
from .evaluation import (
    DEFAULT_SEED,
    CorrelationMatrix,
    ScoreTable,
    add_coverage,
    correlation,
    coverage_by_level,
    coverage_by_range,
    pit_histogram,
    pit_values,
    score,
    summarise_scores,
)
from .pairwise import PairwiseResult, pairwise_comparison

__version__ = "0.1.0"


def example_path(name="example_quantile.csv"):
    """Path of a bundled example forecast file."""
    return resources.files("probscore.fixtures").joinpath(name)


__all__ = [
    "DEFAULT_SEED",
    "HUB_LEVELS",
    "CorrelationMatrix",
    "ForecastTable",
    "ForecastUnit",
    "IngestError",
    "PairwiseResult",
    "ProbscoreError",
    "ScoreTable",
    "ScoringError",
    "ScoringWarning",
    "UnsupportedMetricError",
    "ValidationError",
    "ValidationReport",
    "add_coverage",
    "available_forecasts",
    "correlation",
    "coverage_by_level",
    "coverage_by_range",
    "example_path",
    "from_frame",
    "ingest",
    "pairwise_comparison",
    "pit_histogram",
    "pit_values",
    "sample_to_quantile",
    "score",
    "summarise_scores",
    "validate",
    "write_table",
]
