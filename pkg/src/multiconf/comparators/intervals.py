"""Binomial confidence intervals: Clopper-Pearson, Wilson score and Wald."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from .special import DEFAULT_CONFIG, SpecialFunctionConfig, beta_quantile, bisect, normal_quantile

__all__ = [
    "Interval",
    "BoundaryWarning",
    "binomial_pmf",
    "binomial_upper_tail",
    "binomial_lower_tail",
    "clopper_pearson_interval",
    "clopper_pearson_beta",
    "wilson_interval",
    "wald_interval",
]


class BoundaryWarning(UserWarning):
    """The Wald interval is degenerate when the observed proportion is 0 or 1."""


@dataclass(frozen=True)
class Interval:
    lower: float
    upper: float
    boundary: bool = False

    def __post_init__(self) -> None:
        if self.lower > self.upper:
            raise ValueError(f"lower {self.lower} exceeds upper {self.upper}")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def __contains__(self, value: float) -> bool:
        return self.lower <= value <= self.upper


def _check_counts(x1: int, n: int) -> None:
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0 <= x1 <= n:
        raise ValueError(f"x1={x1} outside [0, {n}]")


def binomial_pmf(i: int, n: int, theta: float) -> float:
    if theta <= 0.0:
        return 1.0 if i == 0 else 0.0
    if theta >= 1.0:
        return 1.0 if i == n else 0.0
    log_p = (
        math.lgamma(n + 1) - math.lgamma(i + 1) - math.lgamma(n - i + 1)
        + i * math.log(theta) + (n - i) * math.log1p(-theta)
    )
    return math.exp(log_p)


def binomial_upper_tail(k: int, n: int, theta: float) -> float:
    """P(X >= k) for X ~ Binom(n, theta), by exact summation."""
    if k <= 0:
        return 1.0
    return math.fsum(binomial_pmf(i, n, theta) for i in range(k, n + 1))


def binomial_lower_tail(k: int, n: int, theta: float) -> float:
    """P(X <= k) for X ~ Binom(n, theta), by exact summation."""
    if k >= n:
        return 1.0
    return math.fsum(binomial_pmf(i, n, theta) for i in range(0, k + 1))


def clopper_pearson_interval(
    x1: int, n: int, alpha: float = 0.05, cfg: SpecialFunctionConfig = DEFAULT_CONFIG
) -> Interval:
    """Exact two-sided interval by bisection on the binomial tail sums.

    The upper tail P(X >= x1) increases with theta and the lower tail
    P(X <= x1) decreases, so each endpoint sits where one tail crosses
    alpha / 2. The outer side of the final bracket is returned, which keeps
    the interval on the conservative (wider) side.
    """
    _check_counts(x1, n)
    half = 0.5 * alpha
    tol = min(cfg.tolerance, 1e-12)
    if x1 == 0:
        lower = 0.0
    else:
        lower, _ = bisect(lambda t: binomial_upper_tail(x1, n, t) >= half, 0.0, 1.0, cfg, tol)
    if x1 == n:
        upper = 1.0
    else:
        _, upper = bisect(lambda t: binomial_lower_tail(x1, n, t) < half, 0.0, 1.0, cfg, tol)
    return Interval(lower, upper)


def clopper_pearson_beta(
    x1: int, n: int, alpha: float = 0.05, cfg: SpecialFunctionConfig = DEFAULT_CONFIG
) -> Interval:
    """Same interval through Beta quantiles: Beta(x1, n-x1+1) and Beta(x1+1, n-x1)."""
    _check_counts(x1, n)
    lower = 0.0 if x1 == 0 else beta_quantile(x1, n - x1 + 1, 0.5 * alpha, cfg)
    upper = 1.0 if x1 == n else beta_quantile(x1 + 1, n - x1, 1.0 - 0.5 * alpha, cfg)
    return Interval(lower, upper)


def wilson_interval(
    x1: int, n: int, alpha: float = 0.05, cfg: SpecialFunctionConfig = DEFAULT_CONFIG
) -> Interval:
    _check_counts(x1, n)
    z = normal_quantile(1.0 - 0.5 * alpha, cfg)
    z2 = z * z
    p_hat = x1 / n
    center = p_hat + z2 / (2 * n)
    radius = z * math.sqrt(p_hat * (1 - p_hat) / n + z2 / (4 * n * n))
    denom = 1 + z2 / n
    # p_hat in {0, 1} makes the radius equal z^2/2n; pin the exact endpoint
    lower = 0.0 if x1 == 0 else max(0.0, (center - radius) / denom)
    upper = 1.0 if x1 == n else min(1.0, (center + radius) / denom)
    return Interval(lower, upper)


def wald_interval(
    x1: int, n: int, alpha: float = 0.05, cfg: SpecialFunctionConfig = DEFAULT_CONFIG, warn: bool = True
) -> Interval:
    """p_hat +- z * sqrt(p_hat (1 - p_hat) / n), clamped to [0, 1].

    At p_hat in {0, 1} the interval collapses to a point; it is returned with
    ``boundary=True`` and a :class:`BoundaryWarning` is emitted.
    """
    _check_counts(x1, n)
    z = normal_quantile(1.0 - 0.5 * alpha, cfg)
    p_hat = x1 / n
    if x1 in (0, n):
        if warn:
            warnings.warn(
                f"Wald interval is degenerate at x1={x1}, n={n} (observation on the boundary)",
                BoundaryWarning,
                stacklevel=2,
            )
        return Interval(p_hat, p_hat, boundary=True)
    half_width = z * math.sqrt(p_hat * (1 - p_hat) / n)
    return Interval(max(0.0, p_hat - half_width), min(1.0, p_hat + half_width))
