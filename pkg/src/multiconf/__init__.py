"""Exact small-sample confidence regions for multinomial proportions."""

from .core import (
    DiscreteSimplex,
    OutcomeVector,
    ProbabilityVector,
    ResourceLimitError,
    enumerate_simplex,
    log_pmf,
    resource_caps,
    simplex_grid,
)
from .evaluation import MethodId, compare, coverage_curve, exact_coverage, mean_volume
from .levelset import (
    acceptance_set,
    likelihood_threshold,
    refine_acceptance_set,
    region_contains,
    region_grid,
)

__version__ = "0.1.0"

__all__ = [
    "DiscreteSimplex",
    "MethodId",
    "OutcomeVector",
    "ProbabilityVector",
    "ResourceLimitError",
    "acceptance_set",
    "compare",
    "coverage_curve",
    "enumerate_simplex",
    "exact_coverage",
    "likelihood_threshold",
    "log_pmf",
    "mean_volume",
    "refine_acceptance_set",
    "region_contains",
    "region_grid",
    "resource_caps",
    "simplex_grid",
]
