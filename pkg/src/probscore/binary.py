"""Scores for probability forecasts of binary outcomes."""

import warnings

import numpy as np

from .errors import ScoringError, ScoringWarning

PROB_FLOOR = 1e-20


def _check(prob, observed):
    prob = np.asarray(prob, dtype=float)
    observed = np.asarray(observed, dtype=float)
    if np.any((prob < 0) | (prob > 1)) or np.any(np.isnan(prob)):
        raise ScoringError("predicted probabilities must lie in [0, 1]")
    if not np.all(np.isin(observed, (0.0, 1.0))):
        raise ScoringError("binary observations must be 0 or 1")
    return np.broadcast_arrays(prob, observed)


def brier_score(prob, observed):
    """Squared difference between predicted probability and the 0/1 outcome."""
    prob, observed = _check(prob, observed)
    out = (prob - observed) ** 2
    return float(out) if out.ndim == 0 else out


def log_score_binary(prob, observed):
    """Negative log of the probability given to the outcome that occurred.

    Probabilities are clamped to ``[1e-20, 1 - 1e-20]``; a
    :class:`~probscore.errors.ScoringWarning` is emitted when that happens.
    """
    prob, observed = _check(prob, observed)
    assigned = np.where(observed == 1.0, prob, 1.0 - prob)
    clamped = np.clip(assigned, PROB_FLOOR, 1.0 - PROB_FLOOR)
    if np.any(clamped != assigned):
        warnings.warn("probability clamped away from 0 or 1 before taking the log", ScoringWarning, stacklevel=2)
    out = 0.0 - np.log(clamped)
    return float(out) if out.ndim == 0 else out
