"""Scores for forecasts given as predictive samples."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ScoringError, ScoringWarning, UnsupportedMetricError

DENSITY_FLOOR = 1e-20
MAD_CONSTANT = 1.4826
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class SampleForecast:
    samples: np.ndarray
    observed: float
    discrete: bool = False

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float).ravel()
        if samples.size < 1:
            raise ScoringError("a sample forecast needs at least one sample")
        if not np.all(np.isfinite(samples)) or not math.isfinite(self.observed):
            raise ScoringError("samples and observation must be finite")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "observed", float(self.observed))


def _as_samples(samples):
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < 1:
        raise ScoringError("at least one sample is required")
    return x


def ecdf(samples, value):
    """Right-closed empirical CDF: share of samples <= value."""
    x = np.sort(_as_samples(samples))
    return np.searchsorted(x, value, side="right") / x.size


def crps_sample(observed, samples):
    """Continuous ranked probability score of an empirical distribution.

    Uses the sorted form of the pairwise-difference term, so the cost is
    O(n log n):  sum_i sum_j |x_i - x_j| = 2 * sum_i (2i - n - 1) x_(i).
    """
    x = np.sort(_as_samples(samples))
    n = x.size
    abs_err = np.mean(np.abs(x - observed))
    weights = 2.0 * np.arange(1, n + 1) - n - 1
    spread = np.dot(weights, x) / (n * n)
    return max(float(abs_err - spread), 0.0)


def silverman_bandwidth(samples):
    """Silverman's rule of thumb, 0.9 * min(sd, IQR / 1.34) * n^(-1/5)."""
    x = _as_samples(samples)
    sd = np.std(x, ddof=1)
    q75, q25 = np.percentile(x, [75, 25])
    spread = min(sd, (q75 - q25) / 1.34)
    if spread <= 0:
        spread = sd
    return 0.9 * spread * x.size ** (-0.2)


def kde_density(samples, value, bandwidth=None):
    """Gaussian kernel density estimate evaluated at ``value``."""
    x = _as_samples(samples)
    h = silverman_bandwidth(x) if bandwidth is None else bandwidth
    if h <= 0:
        raise ScoringError("kernel bandwidth is zero (all samples identical)")
    z = (value - x) / h
    return float(np.mean(np.exp(-0.5 * z * z)) / (h * math.sqrt(2.0 * math.pi)))


def log_score_sample(observed, samples, discrete=False):
    """Negative log of a kernel density estimate at the observed value.

    Densities below :data:`DENSITY_FLOOR` are floored and a
    :class:`~probscore.errors.ScoringWarning` is emitted.
    """
    if discrete:
        raise UnsupportedMetricError("log_score is not available for integer-valued sample forecasts")
    x = _as_samples(samples)
    if x.size < 2:
        raise ScoringError("log_score needs at least 2 samples")
    density = kde_density(x, observed)
    if density <= DENSITY_FLOOR:
        warnings.warn(
            f"estimated density {density:.3g} at the observation was floored to {DENSITY_FLOOR:g}",
            ScoringWarning,
            stacklevel=2,
        )
        density = DENSITY_FLOOR
    return -math.log(density)


def dss_sample(observed, samples):
    """Dawid-Sebastiani score from the sample mean and standard deviation."""
    x = _as_samples(samples)
    if x.size < 2:
        raise ScoringError("dss needs at least 2 samples")
    sd = np.std(x, ddof=1)
    if not sd > 0:
        raise ScoringError("dss is undefined for a forecast with zero sample variance")
    mean = np.mean(x)
    return float(((observed - mean) / sd) ** 2 + 2.0 * math.log(sd))


def bias_sample(observed, samples, discrete=False):
    """Share of predictive mass above vs. below the observation, in [-1, 1].

    -1 means every sample lies below the observation (under-prediction),
    +1 means every sample lies above it. Samples equal to a continuous
    observation count half above and half below, so a point mass on the
    observation has bias 0.
    """
    x = np.sort(_as_samples(samples))
    n = x.size
    upto = np.searchsorted(x, observed, side="right") / n
    if discrete:
        below = np.searchsorted(x, observed - 1, side="right") / n
    else:
        below = np.searchsorted(x, observed, side="left") / n
    return float(1.0 - (upto + below))


def mad_dispersion(samples):
    """Normalised median absolute deviation around the median."""
    x = _as_samples(samples)
    return float(MAD_CONSTANT * np.median(np.abs(x - np.median(x))))


def pit_value(observed, samples, rng, discrete=False):
    """Probability integral transform of the observation.

    For integer-valued targets the value is drawn uniformly between the
    empirical CDF at ``observed - 1`` and at ``observed``.

    Parameters
    ----------
    rng : int or numpy.random.Generator
        Seed or generator; used only when ``discrete`` is true.
    """
    x = np.sort(_as_samples(samples))
    n = x.size
    upper = np.searchsorted(x, observed, side="right") / n
    if not discrete:
        return float(upper)
    lower = np.searchsorted(x, observed - 1, side="right") / n
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    return float(gen.uniform(lower, upper)) if upper > lower else float(upper)


def ae_median_sample(observed, samples):
    return float(abs(np.median(_as_samples(samples)) - observed))


def se_mean_sample(observed, samples):
    return float((np.mean(_as_samples(samples)) - observed) ** 2)
