import numpy as np
import pandas as pd
import pytest
from scipy import stats

from probscore import data
from probscore.data import HUB_LEVELS


def brute_force_crps(y, x):
    """O(n^2) double-sum form of the sample CRPS, used as the oracle."""
    x = np.asarray(x, dtype=float)
    n = x.size
    return np.abs(x - y).sum() / n - np.abs(x[:, None] - x[None, :]).sum() / (2.0 * n * n)


def normal_quantile_table(n_units, rng, pred_scale=1.0, levels=HUB_LEVELS, model="m"):
    """Quantile forecasts of N(0, pred_scale) for observations drawn from N(0, 1)."""
    levels = np.asarray(levels)
    y = rng.standard_normal(n_units)
    q = stats.norm.ppf(levels) * pred_scale
    df = pd.DataFrame(
        {
            "model": model,
            "unit": np.repeat(np.arange(n_units), levels.size),
            "quantile": np.tile(levels, n_units),
            "prediction": np.tile(q, n_units),
            "true_value": np.repeat(y, levels.size),
        }
    )
    return data.from_frame(df)


def normal_sample_table(n_units, n_samples, rng, pred_scale=1.0, model="m"):
    """Sample forecasts of N(0, pred_scale) for observations drawn from N(0, 1)."""
    y = rng.standard_normal(n_units)
    df = pd.DataFrame(
        {
            "model": model,
            "unit": np.repeat(np.arange(n_units), n_samples),
            "sample": np.tile(np.arange(1, n_samples + 1), n_units),
            "prediction": pred_scale * rng.standard_normal(n_units * n_samples),
            "true_value": np.repeat(y, n_samples),
        }
    )
    return data.from_frame(df)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def example_table():
    from probscore import example_path

    return data.ingest(example_path())


@pytest.fixture(scope="session")
def example_report(example_table):
    return data.validate(example_table)


def pytest_terminal_summary(terminalreporter):
    module = __import__("sys").modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
