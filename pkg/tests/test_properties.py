import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from multiconf.comparators import score_region_contains
from multiconf.core import enumerate_simplex, log_pmf, log_pmf_matrix
from multiconf.evaluation import exact_coverage
from multiconf.levelset import acceptance_set, refine_acceptance_set, region_contains

FAST = settings(max_examples=40, deadline=None)


@st.composite
def problems(draw, max_d=4, max_n=8):
    d = draw(st.integers(2, max_d))
    n = draw(st.integers(1, max_n))
    weights = draw(st.lists(st.integers(0, 20), min_size=d, max_size=d).filter(lambda w: sum(w) > 0))
    theta = np.asarray(weights, dtype=float) / sum(weights)
    theta[-1] = 1.0 - theta[:-1].sum()
    theta = np.clip(theta, 0.0, 1.0)
    cuts = sorted(draw(st.lists(st.integers(0, n), min_size=d - 1, max_size=d - 1)))
    x = tuple(np.diff([0, *cuts, n]).tolist())
    perm = draw(st.permutations(range(d)))
    alpha = draw(st.sampled_from([0.01, 0.05, 0.1, 0.2]))
    return tuple(theta), x, list(perm), alpha


@FAST
@given(problems())
def test_log_pmf_permutation_invariant(prob):
    theta, x, perm, _ = prob
    permuted = log_pmf([theta[i] for i in perm], [x[i] for i in perm])
    assert permuted == log_pmf(theta, x)


@FAST
@given(problems())
def test_pmf_normalized(prob):
    theta, x, _, _ = prob
    s = enumerate_simplex(len(theta), sum(x))
    assert abs(np.exp(log_pmf_matrix(np.array([theta]), s.outcomes)).sum() - 1.0) < 1e-12


@FAST
@given(problems())
def test_level_set_equivariance(prob):
    theta, x, perm, alpha = prob
    a = region_contains(theta, x, alpha)
    b = region_contains([theta[i] for i in perm], [x[i] for i in perm], alpha)
    assert a == b


@FAST
@given(problems())
def test_score_equivariance(prob):
    theta, x, perm, alpha = prob
    a = score_region_contains(theta, x, alpha)
    b = score_region_contains([theta[i] for i in perm], [x[i] for i in perm], alpha)
    assert a == b


@FAST
@given(problems())
def test_mle_always_in_region(prob):
    _, x, _, alpha = prob
    n = sum(x)
    assert region_contains([c / n for c in x], x, alpha)


@FAST
@given(problems(max_d=3))
def test_acceptance_sets_nested_in_alpha(prob):
    theta, x, _, _ = prob
    n = sum(x)
    small = {tuple(r) for r in acceptance_set(theta, 0.2, n).members}
    big = {tuple(r) for r in acceptance_set(theta, 0.05, n).members}
    assert small <= big


@FAST
@given(problems())
def test_coverage_at_least_nominal(prob):
    theta, x, _, alpha = prob
    cov = exact_coverage("level-set", theta, sum(x), alpha)
    assert 1 - alpha - 1e-12 <= cov <= 1.0


@FAST
@given(problems(max_d=3))
def test_refinement_sandwich(prob):
    theta, x, _, alpha = prob
    r = refine_acceptance_set(theta, alpha, sum(x))
    assert 1 - alpha <= r.mass <= r.base.mass + 1e-15
