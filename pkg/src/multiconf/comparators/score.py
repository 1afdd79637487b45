"""Pearson score region: the chi-square inversion that generalizes the Wilson interval to d >= 2."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from ..core import OutcomeLike, ProbabilityLike, as_outcome, as_probability, iter_chunks
from .special import chi2_quantile

__all__ = ["score_statistic", "score_statistic_matrix", "score_quantile", "score_region_contains", "score_accept_matrix"]


@lru_cache(maxsize=None)
def score_quantile(d: int, alpha: float) -> float:
    return chi2_quantile(d - 1, 1.0 - alpha)


def score_statistic_matrix(thetas: np.ndarray, outcomes: np.ndarray) -> np.ndarray:
    """sum_i (x_i - n theta_i)^2 / (n theta_i) for every (theta, x) pair.

    Coordinates with theta_i = 0 contribute 0 when x_i = 0 (the limit of the
    term along the face) and +inf otherwise.
    """
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    outcomes = np.atleast_2d(np.asarray(outcomes, dtype=float))
    n = outcomes[0].sum()
    out = np.empty((len(thetas), len(outcomes)))
    for sl in iter_chunks(len(thetas), outcomes.size):
        expected = n * thetas[sl][:, None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = (outcomes[None, :, :] - expected) ** 2 / expected
        zero = expected == 0
        terms = np.where(zero, np.where(outcomes[None, :, :] == 0, 0.0, np.inf), terms)
        terms.sort(axis=-1)
        out[sl] = terms.sum(axis=-1)
    return out


def score_statistic(theta: ProbabilityLike, x: OutcomeLike) -> float:
    theta = as_probability(theta)
    x = as_outcome(x)
    if theta.d != x.d:
        raise ValueError("dimension mismatch")
    if x.n == 0:
        raise ValueError("n must be >= 1")
    return float(score_statistic_matrix(np.asarray(theta.entries)[None, :], np.asarray(x.counts)[None, :])[0, 0])


def score_accept_matrix(thetas: np.ndarray, outcomes: np.ndarray, alpha: float) -> np.ndarray:
    d = np.atleast_2d(outcomes).shape[1]
    return score_statistic_matrix(thetas, outcomes) <= score_quantile(d, alpha)


def score_region_contains(theta: ProbabilityLike, x: OutcomeLike, alpha: float = 0.05) -> bool:
    """True iff the Pearson statistic at theta is within the chi2_{d-1} (1 - alpha) quantile."""
    x = as_outcome(x)
    return score_statistic(theta, x) <= score_quantile(x.d, alpha)
