"""Numerical checks of the Beta-Binomial and Dirichlet-Multinomial correspondences."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..core import ProbabilityLike, as_probability, enumerate_simplex, log_pmf_matrix
from .intervals import binomial_upper_tail
from .special import betainc

__all__ = ["beta_binomial_identity_check", "DirichletCheck", "dirichlet_multinomial_identity_check"]


def beta_binomial_identity_check(n: int, k: int, p1: float) -> float:
    """|P(X >= k) - P(B <= p1)| for X ~ Binom(n, p1), B ~ Beta(k, n - k + 1)."""
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    if not 0.0 <= p1 <= 1.0:
        raise ValueError("p1 must lie in [0, 1]")
    return abs(binomial_upper_tail(k, n, p1) - betainc(k, n - k + 1, p1))


@dataclass(frozen=True)
class DirichletCheck:
    exact: float
    estimate: float
    standard_error: float

    @property
    def z_score(self) -> float:
        diff = self.exact - self.estimate
        if self.standard_error == 0:
            return 0.0 if diff == 0 else math.inf
        return abs(diff) / self.standard_error


def dirichlet_multinomial_identity_check(
    d: int,
    n: int,
    thresholds: Sequence[int],
    p: ProbabilityLike,
    samples: int,
    rng: np.random.Generator,
) -> DirichletCheck:
    """Exact multinomial partial-sum event against a Monte-Carlo Dirichlet estimate.

    The left side is P(X_1 >= k_1, X_1 + X_2 >= k_2, ..., X_1 + ... + X_{d-1} >= k_{d-1})
    by enumeration. The right side estimates
    P(D_1 <= p_1, D_1 + D_2 <= p_1 + p_2, ...) for
    D ~ Dirichlet(k_1 - k_0, ..., k_d - k_{d-1}) with k_0 = 0, k_d = n + 1.
    """
    p = as_probability(p)
    ks = [int(k) for k in thresholds]
    if p.d != d or len(ks) != d - 1:
        raise ValueError("need d probabilities and d - 1 thresholds")
    bounds = [0, *ks, n + 1]
    if any(b > c for b, c in zip(bounds, bounds[1:])) or (ks and ks[-1] > n):
        raise ValueError(f"thresholds must satisfy 0 <= k_1 <= ... <= k_(d-1) <= n, got {ks}")
    if samples < 2:
        raise ValueError("need at least 2 samples")

    simplex = enumerate_simplex(d, n)
    partial = np.cumsum(simplex.outcomes, axis=1)[:, : d - 1]
    event = np.all(partial >= np.asarray(ks), axis=1)
    probs = np.exp(log_pmf_matrix(np.asarray(p.entries)[None, :], simplex.outcomes, n)[0])
    exact = math.fsum(probs[event])

    shape = np.diff(bounds).astype(float)
    draws = rng.dirichlet(shape, size=samples)
    cum_draws = np.cumsum(draws, axis=1)[:, : d - 1]
    cum_p = np.cumsum(p.entries)[: d - 1]
    hits = np.all(cum_draws <= cum_p, axis=1)
    estimate = float(hits.mean())
    # binomial standard error under the exact value, defined even when no draw hits
    se = math.sqrt(exact * (1.0 - exact) / samples)
    return DirichletCheck(exact, estimate, se)
