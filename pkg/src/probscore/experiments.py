"""Seeded simulations of how sample-based scores behave.

Four experiment shapes are supported:

* ``convergence`` - score estimates from n predictive samples against the
  closed-form score of the normal predictive distribution.
* ``asymmetry`` - mean scores when the predictive spread is too narrow or
  too wide relative to the data-generating normal.
* ``scale`` - mean scores of perfect forecasts as the location (A) or the
  spread (B) of the data changes.
* ``locality`` - two discrete forecasters that give the observed outcome
  the same probability but spread the remaining mass differently.

Repetitions draw from independent child generators spawned from one
:class:`numpy.random.SeedSequence`, and within a repetition every grid
point reuses the same standard-normal draws (common random numbers), so
differences along a grid are not drowned by Monte-Carlo noise.
"""

from __future__ import annotations

import configparser
import math
import warnings
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path

import numpy as np
import pandas as pd
from scipy import stats

from . import plotdata
from .errors import ScoringWarning
from .sample import crps_sample, dss_sample, log_score_sample

EXPERIMENTS = ("convergence", "asymmetry", "locality", "scale")
METRICS = ("crps", "log_score", "dss")


@dataclass
class ExperimentConfig:
    experiment: str
    mu: float = 0.0
    sigma: float = 1.0
    true_sigma: float = 5.0
    observed: float = 0.0
    sample_sizes: list = field(default_factory=lambda: [10, 100, 1000, 10000, 100000])
    sigma_grid: list = field(default_factory=lambda: [2.5, 5.0, 10.0])
    mu_grid: list = field(default_factory=lambda: [1.0, 10.0, 100.0])
    n_samples: int = 1000
    repetitions: int = 500
    seed: int = 1

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment '{self.experiment}' (choose from {', '.join(EXPERIMENTS)})")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if any(n < 1 for n in self.sample_sizes) or self.n_samples < 1:
            raise ValueError("sample sizes must be positive")


_LIST_FIELDS = {"sample_sizes": int, "sigma_grid": float, "mu_grid": float}


def _coerce(name, raw):
    kinds = {f.name: f.type for f in fields(ExperimentConfig)}
    if name not in kinds:
        raise ValueError(f"unknown experiment setting '{name}'")
    if name in _LIST_FIELDS:
        cast = _LIST_FIELDS[name]
        return [cast(float(v)) for v in str(raw).replace(",", " ").split()]
    if name == "experiment":
        return str(raw).strip()
    if name in ("n_samples", "repetitions", "seed"):
        return int(raw)
    return float(raw)


def load_config(source, **overrides):
    """Read an experiment config from an INI file or a bundled config name.

    ``source`` is either a path or one of :data:`EXPERIMENTS`, in which case
    the shipped default config is used. Settings live in the
    ``[experiment]`` section; ``overrides`` take precedence.
    """
    parser = configparser.ConfigParser()
    path = Path(str(source))
    if path.exists():
        parser.read(path)
    elif str(source) in EXPERIMENTS:
        text = resources.files("probscore.configs").joinpath(f"{source}.ini").read_text()
        parser.read_string(text)
    else:
        raise FileNotFoundError(f"no config file or bundled experiment named '{source}'")
    if not parser.has_section("experiment"):
        raise ValueError("config needs an [experiment] section")
    values = {k: _coerce(k, v) for k, v in parser.items("experiment")}
    values.update({k: _coerce(k, v) for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**values)


def normal_crps(mu, sigma, y):
    z = (y - mu) / sigma
    return sigma * (z * (2 * stats.norm.cdf(z) - 1) + 2 * stats.norm.pdf(z) - 1 / math.sqrt(math.pi))


def normal_log_score(mu, sigma, y):
    z = (y - mu) / sigma
    return 0.5 * z * z + math.log(sigma) + 0.5 * math.log(2 * math.pi)


def normal_dss(mu, sigma, y):
    z = (y - mu) / sigma
    return z * z + 2 * math.log(sigma)


def _score_all(y, x):
    # far-off observations floor the log score; expected for narrow forecasts here
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ScoringWarning)
        log_score = log_score_sample(y, x)
    return {"crps": crps_sample(y, x), "log_score": log_score, "dss": dss_sample(y, x)}


def _generators(cfg):
    return [np.random.default_rng(s) for s in np.random.SeedSequence(cfg.seed).spawn(cfg.repetitions)]


def run_convergence(cfg):
    """Distribution of score estimates for growing sample sizes.

    Returns
    -------
    pandas.DataFrame
        Columns ``sample_size, metric, mean, q05, q25, q75, q95, truth``.
    """
    y = cfg.observed
    truth = {
        "crps": normal_crps(cfg.mu, cfg.sigma, y),
        "log_score": normal_log_score(cfg.mu, cfg.sigma, y),
        "dss": normal_dss(cfg.mu, cfg.sigma, y),
    }
    results = {(n, m): [] for n in cfg.sample_sizes for m in METRICS}
    for rng in _generators(cfg):
        for n in cfg.sample_sizes:
            x = cfg.mu + cfg.sigma * rng.standard_normal(max(n, 2))
            for m, v in _score_all(y, x).items():
                results[(n, m)].append(v)
    rows = []
    for n in cfg.sample_sizes:
        for m in METRICS:
            v = np.asarray(results[(n, m)])
            q05, q25, q75, q95 = np.quantile(v, [0.05, 0.25, 0.75, 0.95])
            rows.append([n, m, v.mean(), q05, q25, q75, q95, truth[m]])
    return pd.DataFrame(rows, columns=["sample_size", "metric", "mean", "q05", "q25", "q75", "q95", "truth"])


def run_asymmetry(cfg):
    """Mean scores of N(mu, s) forecasts for data from N(mu, true_sigma).

    Returns
    -------
    pandas.DataFrame
        Columns ``sigma_pred, metric, mean``.
    """
    totals = {(s, m): 0.0 for s in cfg.sigma_grid for m in METRICS}
    for rng in _generators(cfg):
        y = cfg.mu + cfg.true_sigma * rng.standard_normal()
        z = rng.standard_normal(cfg.n_samples)
        for s in cfg.sigma_grid:
            for m, v in _score_all(y, cfg.mu + s * z).items():
                totals[(s, m)] += v
    rows = [[s, m, totals[(s, m)] / cfg.repetitions] for s in cfg.sigma_grid for m in METRICS]
    return pd.DataFrame(rows, columns=["sigma_pred", "metric", "mean"])


def run_scale(cfg):
    """Mean (and sd) of scores of perfect forecasts as mu or sigma varies.

    Experiment A varies ``mu`` over ``mu_grid`` at spread ``sigma``;
    experiment B varies ``sigma`` over ``sigma_grid`` at location ``mu``.
    The ``sd`` column is omitted when there is a single repetition.

    Returns
    -------
    pandas.DataFrame
        Columns ``vary, value, metric, mean[, sd]``.
    """
    settings = [("mu", v, v, cfg.sigma) for v in cfg.mu_grid]
    settings += [("sigma", v, cfg.mu, v) for v in cfg.sigma_grid]
    scores = {(k, v, m): [] for k, v, _, _ in settings for m in METRICS}
    for rng in _generators(cfg):
        e = rng.standard_normal()
        z = rng.standard_normal(cfg.n_samples)
        for kind, value, mu, sigma in settings:
            for m, s in _score_all(mu + sigma * e, mu + sigma * z).items():
                scores[(kind, value, m)].append(s)
    rows = []
    for kind, value, _, _ in settings:
        for m in METRICS:
            v = np.asarray(scores[(kind, value, m)])
            row = [kind, value, m, v.mean()]
            if cfg.repetitions > 1:
                row.append(v.std(ddof=1))
            rows.append(row)
    cols = ["vary", "value", "metric", "mean"] + (["sd"] if cfg.repetitions > 1 else [])
    return pd.DataFrame(rows, columns=cols)


# probabilities over 0..7 goals; both give the observed count (2) probability 0.35
LOCALITY_OBSERVED = 2
LOCALITY_FORECASTERS = {
    "A": [0.10, 0.20, 0.35, 0.20, 0.10, 0.05, 0.00, 0.00],
    "B": [0.30, 0.00, 0.35, 0.00, 0.00, 0.05, 0.10, 0.20],
}


def pmf_crps(pmf, observed):
    """Ranked probability score of a pmf on 0, 1, 2, ... (unit spacing)."""
    cdf = np.cumsum(pmf)
    step = (np.arange(len(pmf)) >= observed).astype(float)
    return float(np.sum((cdf - step) ** 2))


def pmf_dss(pmf, observed):
    k = np.arange(len(pmf))
    mean = np.dot(pmf, k)
    var = np.dot(pmf, (k - mean) ** 2)
    return float((observed - mean) ** 2 / var + math.log(var))


def run_locality(cfg=None, forecasters=None, observed=LOCALITY_OBSERVED):
    """Scores of the two fixed discrete forecasters.

    ``log_score`` and ``brier_event`` (Brier score of the event "outcome
    equals the observation") depend only on the probability at the
    observed count; ``crps`` and ``dss`` depend on the whole distribution.
    """
    forecasters = LOCALITY_FORECASTERS if forecasters is None else forecasters
    rows = []
    for name, pmf in forecasters.items():
        pmf = np.asarray(pmf, dtype=float)
        p_obs = pmf[observed]
        rows += [
            [name, "log_score", -math.log(p_obs)],
            [name, "brier_event", (1.0 - p_obs) ** 2],
            [name, "crps", pmf_crps(pmf, observed)],
            [name, "dss", pmf_dss(pmf, observed)],
        ]
    return pd.DataFrame(rows, columns=["forecaster", "metric", "score"])


def run_experiment(cfg):
    """Run the configured experiment and return ``(table, PlotDataDocument)``."""
    if cfg.experiment == "convergence":
        table = run_convergence(cfg)
        doc = plotdata.experiment_document(table, "sample_size", band=("q05", "q95"), title="score estimates by sample size")
    elif cfg.experiment == "asymmetry":
        table = run_asymmetry(cfg)
        doc = plotdata.experiment_document(table, "sigma_pred", title=f"mean scores, data sd {cfg.true_sigma:g}")
    elif cfg.experiment == "scale":
        table = run_scale(cfg)
        doc = plotdata.experiment_document(
            table.assign(metric=table["vary"] + ":" + table["metric"]), "value", title="mean scores of perfect forecasts"
        )
    else:
        table = run_locality(cfg)
        doc = plotdata.experiment_document(table.assign(x=table["forecaster"]), "x", y="score", title="local vs global scores")
    doc.metadata["config"] = {f.name: getattr(cfg, f.name) for f in fields(cfg)}
    return table, doc
