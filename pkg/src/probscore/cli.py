"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 invalid input data, 3 a score or
statistic could not be computed. Diagnostics go to stderr; every command
writes its result to ``--output`` (``-`` for stdout).
"""

from __future__ import annotations

import configparser
import io
import json
import logging
import sys
import warnings

import click
import pandas as pd

from . import experiments, plotdata
from .data import HUB_LEVELS, OBSERVED, PREDICTED, available_forecasts, ingest, sample_to_quantile, validate, write_table
from .errors import IngestError, ProbscoreError, ScoringError, ValidationError
from .evaluation import (
    DEFAULT_SEED,
    ScoreTable,
    add_coverage,
    correlation,
    coverage_by_level,
    coverage_by_range,
    pit_histogram,
    score,
    summarise_scores,
)
from .pairwise import TESTS, pairwise_comparison

log = logging.getLogger("probscore")

EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_COMPUTATION = 3

PREFERRED_METRICS = ("interval_score", "crps", "brier_score", "ae_point")


# --------------------------------------------------------------------------
# helpers
# --------------------------------------------------------------------------


def _split(value):
    if value is None:
        return []
    if isinstance(value, (list, tuple)):
        return list(value)
    return [v.strip() for v in str(value).split(",") if v.strip()]


def _delimiter(value):
    return "\t" if value in ("tab", "\\t", "\t") else value


def _read_source(path):
    if path == "-":
        return io.StringIO(sys.stdin.read())
    with open(path, encoding="utf-8") as fh:
        return io.StringIO(fh.read())


def _emit(text, output):
    if output == "-":
        click.echo(text, nl=not text.endswith("\n"))
    else:
        with open(output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")


def _frame_text(df, fmt, delimiter=","):
    if fmt == "json":
        return json.dumps(plotdata.table_records(df), indent=1)
    buf = io.StringIO()
    out = df.copy()
    for col in out.columns:
        if pd.api.types.is_float_dtype(out[col]):
            out[col] = ["NA" if pd.isna(v) else repr(float(v)) for v in out[col]]
    out.to_csv(buf, index=False, sep=delimiter, lineterminator="\n")
    return buf.getvalue()


def _scores_text(scores, fmt, delimiter=","):
    if fmt == "json":
        return scores.to_json()
    buf = io.StringIO()
    scores.to_csv(buf, delimiter=delimiter)
    return buf.getvalue()


def _load_forecasts(path, fmt_hint, delimiter):
    table = ingest(_read_source(path), format=fmt_hint, delimiter=delimiter)
    report = validate(table)
    for msg in report.messages + report.warnings:
        log.warning(msg)
    return report.cleaned


def _load_scores_or_forecasts(path, fmt_hint, delimiter, seed):
    """Accept either a score table (CSV or JSON) or raw forecasts."""
    buf = _read_source(path)
    text = buf.getvalue()
    if text.lstrip().startswith("{"):
        return ScoreTable.from_json(text)
    header = text.splitlines()[0].split(delimiter) if text else []
    header = [h.strip() for h in header]
    if OBSERVED in header and PREDICTED in header:
        table = ingest(io.StringIO(text), format=fmt_hint, delimiter=delimiter)
        report = validate(table)
        for msg in report.messages + report.warnings:
            log.warning(msg)
        return score(report.cleaned, seed=seed)
    return ScoreTable.read_csv(io.StringIO(text), delimiter=delimiter)


def _parse_levels(value):
    try:
        return sorted({float(v) for v in _split(value)})
    except ValueError:
        raise click.BadParameter(f"quantile levels must be numbers, got '{value}'", param_hint="--levels") from None


def _default_metric(scores):
    for m in PREFERRED_METRICS:
        if m in scores.metrics:
            return m
    if not scores.metrics:
        raise ScoringError("input has no metric columns")
    return scores.metrics[0]


def _config_default_map(path):
    parser = configparser.ConfigParser()
    if not parser.read(path):
        raise click.BadParameter(f"cannot read config file {path}", param_hint="--config")
    shared = {k.replace("-", "_"): v for k, v in parser.items("defaults")} if parser.has_section("defaults") else {}
    default_map = {}
    for name in cli.commands:
        section = dict(shared)
        if parser.has_section(name):
            section.update({k.replace("-", "_"): v for k, v in parser.items(name) if k not in parser.defaults()})
        known = {p.name for p in cli.commands[name].params}
        default_map[name] = {k: v for k, v in section.items() if k in known}
    return default_map


def _io_options(func):
    func = click.option("--delimiter", default=",", show_default=True, help="Field separator; 'tab' for tabs.")(func)
    func = click.option("--output-format", type=click.Choice(["csv", "json"]), default="csv", show_default=True)(func)
    func = click.option("--output", "-o", default="-", show_default=True, help="Output file, '-' for stdout.")(func)
    func = click.option("--format", "fmt", default=None, help="Format hint for files without quantile/sample columns (binary, point).")(func)
    func = click.option(
        "--input", "-i", "input_path", required=True, type=click.Path(exists=True, dir_okay=False, allow_dash=True)
    )(func)
    return func


_seed_option = click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True)
_by_option = click.option("--by", default="", help="Comma-separated grouping columns.")


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="INI file with per-command defaults.")
@click.option("--verbose", "-v", count=True)
@click.pass_context
def cli(ctx, config_path, verbose):
    """Score and compare probabilistic forecasts."""
    logging.basicConfig(
        level=logging.WARNING - 10 * min(verbose, 2),
        format="%(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    if config_path:
        ctx.default_map = _config_default_map(config_path)


@cli.command()
@_io_options
@click.option("--cleaned", type=click.Path(dir_okay=False), help="Also write the cleaned forecast table here.")
def check(input_path, fmt, output, output_format, delimiter, cleaned):
    """Validate a forecast file and report what was inferred."""
    delimiter = _delimiter(delimiter)
    report = validate(ingest(_read_source(input_path), format=fmt, delimiter=delimiter))
    _emit(json.dumps(report.to_dict(), indent=1), output)
    if cleaned:
        write_table(report.cleaned, cleaned, delimiter=delimiter)


@cli.command()
@_io_options
@_by_option
def available(input_path, fmt, output, output_format, delimiter, by):
    """Count available forecasts per group."""
    delimiter = _delimiter(delimiter)
    table = _load_forecasts(input_path, fmt, delimiter)
    _emit(_frame_text(available_forecasts(table, _split(by)), output_format, delimiter), output)


@cli.command("score")
@_io_options
@_seed_option
@click.option("--metrics", default=None, help="Comma-separated subset of metrics.")
@click.option(
    "--levels",
    default=None,
    help="Comma-separated quantile levels, or 'hub'; sample forecasts are converted to these quantiles before scoring.",
)
def score_cmd(input_path, fmt, output, output_format, delimiter, seed, metrics, levels):
    """Score every forecast."""
    delimiter = _delimiter(delimiter)
    table = _load_forecasts(input_path, fmt, delimiter)
    if levels:
        if table.format != "sample":
            raise click.UsageError("--levels only applies to sample forecasts")
        grid = HUB_LEVELS if levels == "hub" else _parse_levels(levels)
        table = sample_to_quantile(table, grid)
    scores = score(table, seed=seed, metrics=_split(metrics) or None)
    _emit(_scores_text(scores, output_format, delimiter), output)


@cli.command()
@_io_options
@_seed_option
@_by_option
@click.option("--fun", default="mean", show_default=True, type=click.Choice(["mean", "median", "sum", "min", "max", "signif"]))
@click.option("--digits", type=int, default=2, show_default=True, help="Significant digits for --fun signif.")
@click.option("--ranges", default=None, help="Add coverage_R columns for these interval ranges before summarising.")
def summarise(input_path, fmt, output, output_format, delimiter, seed, by, fun, digits, ranges):
    """Summarise scores (or forecasts, scored on the fly) by group."""
    delimiter = _delimiter(delimiter)
    scores = _load_scores_or_forecasts(input_path, fmt, delimiter, seed)
    by = _split(by) or None
    if ranges:
        scores = add_coverage(scores, [float(r) for r in _split(ranges)], by or scores.forecast_unit)
    summary = summarise_scores(scores, by=by, fun=fun, digits=digits)
    _emit(_scores_text(summary, output_format, delimiter), output)


@cli.command()
@_io_options
@_seed_option
@_by_option
@click.option("--metric", default=None, help="Score to compare (default: the format's main score).")
@click.option("--baseline", default=None, help="Model whose relative skill scales all others.")
@click.option("--test", type=click.Choice(TESTS), default="wilcoxon", show_default=True)
def pairwise(input_path, fmt, output, output_format, delimiter, seed, by, metric, baseline, test):
    """Pairwise relative-skill tournament between models."""
    delimiter = _delimiter(delimiter)
    scores = _load_scores_or_forecasts(input_path, fmt, delimiter, seed)
    metric = metric or _default_metric(scores)
    result = pairwise_comparison(scores, metric, by=_split(by), baseline=baseline, test=test, seed=seed)
    if output_format == "json":
        _emit(result.to_json(), output)
        return
    keys = list(result.by) + ["model"]
    merged = result.pairs.merge(result.per_model, on=keys, how="left")
    _emit(_frame_text(merged, "csv", delimiter), output)


@cli.command()
@_io_options
@_seed_option
@_by_option
@click.option("--bins", type=int, default=10, show_default=True)
@click.option("--plot", "plot_path", type=click.Path(dir_okay=False), help="Also write the PIT histogram plot data here.")
def pit(input_path, fmt, output, output_format, delimiter, seed, by, bins, plot_path):
    """PIT histogram masses per group."""
    delimiter = _delimiter(delimiter)
    table = _load_forecasts(input_path, fmt, delimiter)
    hist = pit_histogram(table, by=_split(by), bins=bins, seed=seed)
    _emit(_frame_text(hist, output_format, delimiter), output)
    if plot_path:
        _emit(plotdata.pit_histogram_document(hist, _split(by)).to_json(), plot_path)


@cli.command("correlation")
@_io_options
@_seed_option
@click.option("--metrics", default=None, help="Comma-separated metrics (default: all).")
def correlation_cmd(input_path, fmt, output, output_format, delimiter, seed, metrics):
    """Pearson correlation between metrics across forecasts."""
    delimiter = _delimiter(delimiter)
    scores = _load_scores_or_forecasts(input_path, fmt, delimiter, seed)
    corr = correlation(scores, _split(metrics) or None)
    if output_format == "json":
        _emit(json.dumps(corr.to_dict(), indent=1), output)
    else:
        frame = corr.to_frame().reset_index(names="metric")
        _emit(_frame_text(frame, "csv", delimiter), output)


@cli.command("plotdata")
@click.argument("kind", type=click.Choice(["wis-decomposition", "interval-coverage", "quantile-coverage", "heatmap", "availability", "correlation", "pit-histogram"]))
@_io_options
@_seed_option
@_by_option
@click.option("--x", "x_col", default="model", show_default=True)
@click.option("--y", "y_col", default=None)
@click.option("--metric", default=None)
@click.option("--bins", type=int, default=10, show_default=True)
def plotdata_cmd(kind, input_path, fmt, output, output_format, delimiter, seed, by, x_col, y_col, metric, bins):
    """Emit a renderer-agnostic plot-data JSON document."""
    delimiter = _delimiter(delimiter)
    by = _split(by)
    if kind in ("interval-coverage", "quantile-coverage", "availability", "pit-histogram"):
        table = _load_forecasts(input_path, fmt, delimiter)
        if kind == "availability":
            if not y_col:
                raise click.UsageError("availability needs --y")
            doc = plotdata.availability_document(available_forecasts(table, [x_col, y_col]), x_col, y_col)
        elif kind == "pit-histogram":
            doc = plotdata.pit_histogram_document(pit_histogram(table, by, bins, seed), by)
        else:
            if table.format == "sample":
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    table = sample_to_quantile(table, HUB_LEVELS)
            if kind == "interval-coverage":
                doc = plotdata.interval_coverage_document(coverage_by_range(table, by), by)
            else:
                doc = plotdata.quantile_coverage_document(coverage_by_level(table, by), by)
    else:
        scores = _load_scores_or_forecasts(input_path, fmt, delimiter, seed)
        if kind == "wis-decomposition":
            doc = plotdata.wis_decomposition_document(scores, x=x_col, by=by)
        elif kind == "heatmap":
            if not y_col:
                raise click.UsageError("heatmap needs --y")
            doc = plotdata.heatmap_document(scores, x_col, y_col, metric or _default_metric(scores))
        else:
            doc = plotdata.correlation_document(correlation(scores))
    _emit(doc.to_json(), output)


@cli.command()
@click.argument("experiment")
@click.option("--seed", type=int, default=None, help="Override the config's seed.")
@click.option("--repetitions", type=int, default=None, help="Override the config's repetitions.")
@click.option("--output", "-o", default="-", show_default=True)
@click.option("--output-format", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
@click.option("--plot", "plot_path", type=click.Path(dir_okay=False), help="Also write plot data here.")
def simulate(experiment, seed, repetitions, output, output_format, plot_path):
    """Run a simulation experiment (bundled name or INI config path)."""
    try:
        cfg = experiments.load_config(experiment, seed=seed, repetitions=repetitions)
    except (FileNotFoundError, ValueError) as exc:
        raise click.UsageError(str(exc)) from None
    table, doc = experiments.run_experiment(cfg)
    _emit(_frame_text(table, output_format), output)
    if plot_path:
        _emit(doc.to_json(), plot_path)


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------


def run(argv=None):
    """Invoke the CLI and return its exit code instead of exiting."""
    try:
        rv = cli.main(args=argv, prog_name="probscore", standalone_mode=False)
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return EXIT_USAGE
    except click.ClickException as exc:
        exc.show()
        return EXIT_USAGE
    except (IngestError, ValidationError) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_VALIDATION
    except (ScoringError, ProbscoreError) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_COMPUTATION
    return rv if isinstance(rv, int) else 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
