"""Classical baselines and the special functions behind them."""

from .identities import DirichletCheck, beta_binomial_identity_check, dirichlet_multinomial_identity_check
from .intervals import (
    BoundaryWarning,
    Interval,
    binomial_lower_tail,
    binomial_upper_tail,
    clopper_pearson_beta,
    clopper_pearson_interval,
    wald_interval,
    wilson_interval,
)
from .score import score_accept_matrix, score_region_contains, score_statistic
from .special import (
    ConvergenceError,
    SpecialFunctionConfig,
    beta_quantile,
    betainc,
    chi2_quantile,
    chi2_survival,
    normal_quantile,
)

__all__ = [
    "BoundaryWarning",
    "ConvergenceError",
    "DirichletCheck",
    "Interval",
    "SpecialFunctionConfig",
    "beta_binomial_identity_check",
    "beta_quantile",
    "betainc",
    "binomial_lower_tail",
    "binomial_upper_tail",
    "chi2_quantile",
    "chi2_survival",
    "clopper_pearson_beta",
    "clopper_pearson_interval",
    "dirichlet_multinomial_identity_check",
    "normal_quantile",
    "score_accept_matrix",
    "score_region_contains",
    "score_statistic",
    "wald_interval",
    "wilson_interval",
]
