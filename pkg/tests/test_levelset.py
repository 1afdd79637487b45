import itertools
import math

import numpy as np
import pytest

from multiconf.core import enumerate_simplex, log_pmf_matrix, simplex_grid
from multiconf.levelset import (
    accept_matrix,
    acceptance_set,
    likelihood_threshold,
    refine_acceptance_set,
    refined_accept_matrix,
    refined_region_contains,
    region_contains,
    region_grid,
    region_volume,
)


def pmf_table(theta, n):
    s = enumerate_simplex(len(theta), n)
    return s, np.exp(log_pmf_matrix(np.array([theta]), s.outcomes, n)[0])


def smallest_cover(probs, level):
    """Brute force: fewest outcomes whose mass reaches level."""
    idx = range(len(probs))
    for size in range(1, len(probs) + 1):
        for subset in itertools.combinations(idx, size):
            if math.fsum(probs[list(subset)]) >= level:
                return size
    return len(probs)


def test_symmetric_binomial_tie_included():
    # (1,3) and (3,1) share the threshold pmf; both must be in
    k = acceptance_set((0.5, 0.5), 0.32, 4)
    assert {tuple(r) for r in k.members} == {(1, 3), (2, 2), (3, 1)}
    assert k.mass == pytest.approx(14 / 16)
    assert k.threshold == pytest.approx(4 / 16)
    assert k.gamma == pytest.approx(2 / 16)


def test_threshold_definition():
    theta, n, alpha = (0.2, 0.3, 0.5), 6, 0.1
    s, probs = pmf_table(theta, n)
    u = likelihood_threshold(theta, alpha, n)
    assert probs[probs >= u].sum() >= 1 - alpha
    assert probs[probs > u * (1 + 1e-9)].sum() < 1 - alpha


@pytest.mark.parametrize(
    "theta,n,alpha",
    [((0.3, 0.7), 8, 0.05), ((0.2, 0.3, 0.5), 4, 0.1), ((0.12, 0.55, 0.33), 3, 0.2), ((0.05, 0.95), 10, 0.05)],
)
def test_minimal_cardinality(theta, n, alpha):
    s, probs = pmf_table(theta, n)
    k = acceptance_set(theta, alpha, n)
    assert len(k) == smallest_cover(probs, 1 - alpha)
    assert 1 - alpha <= k.mass <= 1 + 1e-12


def test_region_contains_matches_acceptance():
    theta = (0.25, 0.25, 0.5)
    k = acceptance_set(theta, 0.05, 5)
    for x in enumerate_simplex(3, 5).outcomes:
        assert region_contains(theta, x, 0.05) == (tuple(x) in k)


def test_mle_in_region_at_vertex():
    assert region_contains((1.0, 0.0, 0.0), (5, 0, 0), 0.05)
    assert not region_contains((1.0, 0.0, 0.0), (4, 1, 0), 0.05)


def test_alpha_validation():
    with pytest.raises(ValueError):
        acceptance_set((0.5, 0.5), 0.0, 3)
    with pytest.raises(ValueError):
        region_contains((0.5, 0.5), (1, 2, 0), 0.05)


def test_accept_matrix_consistent_and_workers():
    s = enumerate_simplex(3, 6)
    grid = simplex_grid(3, 15)
    acc = accept_matrix(grid, s, 0.05)
    for g in range(0, len(grid), 11):
        k = acceptance_set(grid[g], 0.05, 6)
        assert {tuple(r) for r in s.outcomes[acc[g]]} == {tuple(r) for r in k.members}
    one = region_grid((3, 2, 1), 0.05, 30)
    many = region_grid((3, 2, 1), 0.05, 30, workers=3)
    np.testing.assert_array_equal(one.members, many.members)


def test_region_grid_summary():
    r = region_grid((8, 2), 0.05, 200)
    assert r.width == pytest.approx(r.volume) and 0 < r.width < 1
    lo, hi = r.bounds()[0]
    assert lo < 0.8 < hi
    csv = r.to_csv().splitlines()
    assert csv[0] == "p1,p2,member" and len(csv) == 202
    r3 = region_grid((2, 2, 2), 0.05, 20)
    assert r3.width is None
    assert r3.volume == pytest.approx(r3.members.sum() / len(r3.points) / 2)


def test_region_volume_empty():
    grid = simplex_grid(3, 4)
    assert region_volume(np.zeros(len(grid), dtype=bool), grid) == 0.0


class TestRefinement:
    def test_swap_applies(self):
        r = refine_acceptance_set((0.5, 0.5), 0.32, 4)
        assert r.changed
        assert [tuple(v) for v in r.removed] == [(1, 3)]
        assert [tuple(v) for v in r.added] == [(0, 4)]
        assert r.mass == pytest.approx(11 / 16)
        assert r.delta == pytest.approx(5 / 16)

    def test_no_admissible_swap(self):
        # the swap would leave 11/16 < 0.7
        r = refine_acceptance_set((0.5, 0.5), 0.3, 4)
        assert not r.changed and r.mass == r.base.mass

    @pytest.mark.parametrize("theta,n", [((0.2, 0.3, 0.5), 5), ((0.35, 0.65), 9), ((0.1, 0.1, 0.8), 6)])
    def test_sandwich(self, theta, n):
        r = refine_acceptance_set(theta, 0.05, n)
        assert 0.95 <= r.mass <= r.base.mass + 1e-15
        assert len(r.members) == len(r.base.members)
        if r.changed:
            assert r.mass < r.base.mass

    def test_matrix_matches_pointwise(self):
        s = enumerate_simplex(3, 4)
        grid = simplex_grid(3, 8)
        acc = refined_accept_matrix(grid, s, 0.1)
        for g in range(0, len(grid), 5):
            for j, x in enumerate(s.outcomes):
                assert acc[g, j] == refined_region_contains(grid[g], x, 0.1)
