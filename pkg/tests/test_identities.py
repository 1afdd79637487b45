import math

import numpy as np
import pytest
from scipy import stats

from multiconf.comparators import beta_binomial_identity_check, dirichlet_multinomial_identity_check
from multiconf.comparators.intervals import binomial_upper_tail


@pytest.mark.parametrize("n", [1, 4, 13, 30])
def test_beta_binomial(n):
    for k in range(1, n + 1):
        for p1 in (0.05, 0.5, 0.95):
            assert beta_binomial_identity_check(n, k, p1) < 1e-10


def test_binomial_tail_against_scipy():
    for n, k, p in [(10, 3, 0.2), (30, 29, 0.9), (7, 1, 0.01)]:
        assert binomial_upper_tail(k, n, p) == pytest.approx(stats.binom.sf(k - 1, n, p), abs=1e-14)


def test_beta_binomial_validation():
    with pytest.raises(ValueError):
        beta_binomial_identity_check(5, 0, 0.3)
    with pytest.raises(ValueError):
        beta_binomial_identity_check(5, 2, 1.3)


def test_dirichlet_d2_reduces_to_beta():
    # d = 2: P(X1 >= k) against P(Beta(k, n - k + 1) <= p1)
    check = dirichlet_multinomial_identity_check(2, 6, [2], (0.4, 0.6), 200_000, np.random.default_rng(3))
    assert check.exact == pytest.approx(stats.beta.cdf(0.4, 2, 5), abs=1e-12)
    assert check.z_score < 4


@pytest.mark.parametrize("ks,p", [((1, 3), (0.2, 0.3, 0.5)), ((0, 2), (0.5, 0.25, 0.25)), ((2, 2, 5), (0.1, 0.3, 0.2, 0.4))])
def test_dirichlet_monte_carlo(ks, p):
    d = len(p)
    check = dirichlet_multinomial_identity_check(d, 6, ks, p, 200_000, np.random.default_rng(11))
    assert check.z_score < 4
    assert 0 < check.standard_error < 0.01


def test_dirichlet_seeded_reproducible():
    a = dirichlet_multinomial_identity_check(3, 5, (1, 4), (0.3, 0.3, 0.4), 5000, np.random.default_rng(1))
    b = dirichlet_multinomial_identity_check(3, 5, (1, 4), (0.3, 0.3, 0.4), 5000, np.random.default_rng(1))
    assert a == b


def test_dirichlet_validation():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        dirichlet_multinomial_identity_check(3, 5, (4, 2), (0.3, 0.3, 0.4), 100, rng)
    with pytest.raises(ValueError):
        dirichlet_multinomial_identity_check(3, 5, (1,), (0.3, 0.3, 0.4), 100, rng)
    with pytest.raises(ValueError):
        dirichlet_multinomial_identity_check(2, 5, (6,), (0.5, 0.5), 100, rng)
