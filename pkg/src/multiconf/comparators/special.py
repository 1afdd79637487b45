"""Regularized incomplete beta and gamma functions and the quantiles built on them.

The incomplete beta uses the modified Lentz continued fraction; the lower
incomplete gamma uses its power series below ``x < a + 1`` and the
Legendre continued fraction above. Normal and chi-square quantities are
derived from the incomplete gamma, and every quantile is found by bisection
on the corresponding cdf.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

__all__ = [
    "ConvergenceError",
    "SpecialFunctionConfig",
    "DEFAULT_CONFIG",
    "betainc",
    "gammainc_lower",
    "gammainc_upper",
    "beta_quantile",
    "normal_cdf",
    "normal_quantile",
    "chi2_survival",
    "chi2_cdf",
    "chi2_quantile",
    "bisect",
]


class ConvergenceError(ArithmeticError):
    """A series, continued fraction or bisection failed to converge."""


@dataclass(frozen=True)
class SpecialFunctionConfig:
    tolerance: float = 1e-10
    max_iterations: int = 200
    series_eps: float = 1e-16
    series_max_terms: int = 10_000
    tiny: float = 1e-300

    def __post_init__(self) -> None:
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


DEFAULT_CONFIG = SpecialFunctionConfig()


def _beta_cf(a: float, b: float, x: float, cfg: SpecialFunctionConfig) -> float:
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < cfg.tiny:
        d = cfg.tiny
    d = 1.0 / d
    h = d
    for m in range(1, cfg.series_max_terms + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < cfg.tiny:
            d = cfg.tiny
        c = 1.0 + aa / c
        if abs(c) < cfg.tiny:
            c = cfg.tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < cfg.tiny:
            d = cfg.tiny
        c = 1.0 + aa / c
        if abs(c) < cfg.tiny:
            c = cfg.tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < cfg.series_eps:
            return h
    raise ConvergenceError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc(a: float, b: float, x: float, cfg: SpecialFunctionConfig = DEFAULT_CONFIG) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if a <= 0 or b <= 0:
        raise ValueError("shape parameters must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x, cfg) / a
    return 1.0 - front * _beta_cf(b, a, 1.0 - x, cfg) / b


def _gamma_series(a: float, x: float, cfg: SpecialFunctionConfig) -> float:
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(cfg.series_max_terms):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * cfg.series_eps:
            return total * math.exp(-x + a * math.log(x) - math.lgamma(a))
    raise ConvergenceError(f"incomplete gamma series did not converge (a={a}, x={x})")


def _gamma_cf(a: float, x: float, cfg: SpecialFunctionConfig) -> float:
    b = x + 1.0 - a
    c = 1.0 / cfg.tiny
    d = 1.0 / b
    h = d
    for i in range(1, cfg.series_max_terms + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < cfg.tiny:
            d = cfg.tiny
        c = b + an / c
        if abs(c) < cfg.tiny:
            c = cfg.tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < cfg.series_eps:
            return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h
    raise ConvergenceError(f"incomplete gamma continued fraction did not converge (a={a}, x={x})")


def gammainc_lower(a: float, x: float, cfg: SpecialFunctionConfig = DEFAULT_CONFIG) -> float:
    """Regularized lower incomplete gamma P(a, x)."""
    if a <= 0:
        raise ValueError("a must be positive")
    if x <= 0:
        return 0.0
    if x < a + 1.0:
        return _gamma_series(a, x, cfg)
    return 1.0 - _gamma_cf(a, x, cfg)


def gammainc_upper(a: float, x: float, cfg: SpecialFunctionConfig = DEFAULT_CONFIG) -> float:
    """Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x)."""
    if a <= 0:
        raise ValueError("a must be positive")
    if x <= 0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _gamma_series(a, x, cfg)
    return _gamma_cf(a, x, cfg)


def bisect(
    f: Callable[[float], bool],
    lo: float,
    hi: float,
    cfg: SpecialFunctionConfig = DEFAULT_CONFIG,
    tolerance: float | None = None,
) -> tuple[float, float]:
    """Shrink [lo, hi] around the switch point of a monotone predicate.

    ``f(lo)`` is assumed false and ``f(hi)`` true. Returns the final bracket;
    callers choose the side that suits them.
    """
    tol = cfg.tolerance if tolerance is None else tolerance
    for _ in range(cfg.max_iterations):
        if hi - lo <= tol:
            return lo, hi
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            return lo, hi
        if f(mid):
            hi = mid
        else:
            lo = mid
    if hi - lo <= tol:
        return lo, hi
    raise ConvergenceError(f"bisection did not reach width {tol} in {cfg.max_iterations} iterations")


def beta_quantile(a: float, b: float, q: float, cfg: SpecialFunctionConfig = DEFAULT_CONFIG) -> float:
    """t with I_t(a, b) = q."""
    if a <= 0 or b <= 0:
        raise ValueError("shape parameters must be positive")
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie in (0, 1)")
    lo, hi = bisect(lambda t: betainc(a, b, t, cfg) >= q, 0.0, 1.0, cfg, tolerance=min(cfg.tolerance, 1e-13))
    return 0.5 * (lo + hi)


def normal_cdf(x: float, cfg: SpecialFunctionConfig = DEFAULT_CONFIG) -> float:
    # Phi(x) = (1 + sign(x) P(1/2, x^2/2)) / 2
    if x == 0:
        return 0.5
    half = 0.5 * gammainc_upper(0.5, 0.5 * x * x, cfg)
    return 1.0 - half if x > 0 else half


def normal_quantile(q: float, cfg: SpecialFunctionConfig = DEFAULT_CONFIG) -> float:
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie in (0, 1)")
    lo, hi = bisect(lambda t: normal_cdf(t, cfg) >= q, -40.0, 40.0, cfg, tolerance=min(cfg.tolerance, 1e-13))
    return 0.5 * (lo + hi)


def chi2_survival(t: float, df: int, cfg: SpecialFunctionConfig = DEFAULT_CONFIG) -> float:
    """P(chi2_df > t)."""
    if df < 1:
        raise ValueError("df must be >= 1")
    if t <= 0:
        return 1.0
    return gammainc_upper(0.5 * df, 0.5 * t, cfg)


def chi2_cdf(t: float, df: int, cfg: SpecialFunctionConfig = DEFAULT_CONFIG) -> float:
    if df < 1:
        raise ValueError("df must be >= 1")
    if t <= 0:
        return 0.0
    return gammainc_lower(0.5 * df, 0.5 * t, cfg)


def chi2_quantile(df: int, q: float, cfg: SpecialFunctionConfig = DEFAULT_CONFIG) -> float:
    """t with P(chi2_df <= t) = q."""
    if df < 1:
        raise ValueError("df must be >= 1")
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie in (0, 1)")
    hi = max(1.0, float(df))
    while chi2_cdf(hi, df, cfg) < q:
        hi *= 2.0
        if hi > 1e8:
            raise ConvergenceError("could not bracket the chi-square quantile")
    lo, hi = bisect(lambda t: chi2_cdf(t, df, cfg) >= q, 0.0, hi, cfg, tolerance=min(cfg.tolerance, 1e-12) * hi)
    return 0.5 * (lo + hi)
