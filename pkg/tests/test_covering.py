import itertools

import numpy as np
import pytest

from multiconf.comparators import clopper_pearson_interval
from multiconf.core import enumerate_simplex, log_pmf_matrix, simplex_grid
from multiconf.covering import (
    CoveringCollection,
    bottom_to_top,
    collection_masses,
    default_granular,
    fully_granular,
    index_of,
    interval_from_predicate,
    is_equivariant,
    is_permutation_invariant,
    reflected,
    region_accept_matrix,
    region_membership,
    reverse_region_mass,
    set_at,
    spiral_order,
    symmetrized_accept_matrix,
    symmetrized_region,
    top_to_bottom,
)


def test_bottom_to_top_sets():
    c = bottom_to_top(4)
    assert c.kappa == 5 and c.granular
    for k in range(1, 6):
        assert sorted(int(r[0]) for r in set_at(c, k)) == list(range(k))
    assert len(set_at(c, 0)) == 0
    assert index_of((2, 2), c) == 3


def test_top_to_bottom_is_reflection():
    c = bottom_to_top(6)
    r = reflected(c)
    assert r.kind == "top-to-bottom"
    np.testing.assert_array_equal(r.ranks, top_to_bottom(6).ranks)
    np.testing.assert_array_equal(reflected(r).ranks, c.ranks)


def test_reflection_complements():
    c = spiral_order(4)
    r = reflected(c)
    universe = {tuple(x) for x in c.simplex.outcomes}
    for k in range(c.kappa + 1):
        a = {tuple(x) for x in set_at(r, k)}
        b = {tuple(x) for x in set_at(c, c.kappa - k)}
        assert a == universe - b


def test_spiral_order_small():
    c = spiral_order(3)
    order = [tuple(int(v) for v in row) for row in c.order()]
    assert order[:9] == [
        (3, 0, 0), (2, 1, 0), (1, 2, 0),
        (0, 3, 0), (0, 2, 1), (0, 1, 2),
        (0, 0, 3), (1, 0, 2), (2, 0, 1),
    ]
    assert order[9] == (1, 1, 1)
    assert c.checkpoints == (9, 10) and c.granular


@pytest.mark.parametrize("n", [1, 2, 5, 8, 9])
def test_spiral_checkpoints_are_invariant(n):
    c = spiral_order(n)
    assert c.granular
    for k in c.checkpoints:
        assert is_permutation_invariant(c, k)
    assert not is_equivariant(c) or n <= 1


def test_equivariance_negative_control():
    assert not is_equivariant(bottom_to_top(5))
    # a collection ordered by max count is constant on orbits
    s = enumerate_simplex(3, 4)
    ranks = 5 - s.outcomes.max(axis=1)
    _, ranks = np.unique(ranks, return_inverse=True)
    assert is_equivariant(CoveringCollection(s, ranks + 1))


class TestValidation:
    def test_strict_growth(self):
        s = enumerate_simplex(2, 2)
        with pytest.raises(ValueError):
            CoveringCollection(s, np.array([1, 1, 3]))
        with pytest.raises(ValueError):
            CoveringCollection(s, np.array([0, 1, 2]))

    def test_kind_restrictions(self):
        with pytest.raises(ValueError):
            CoveringCollection(enumerate_simplex(3, 2), np.arange(1, 7), "bottom-to-top")
        with pytest.raises(ValueError):
            CoveringCollection(enumerate_simplex(2, 2), np.arange(1, 4), "spiral-d3")

    def test_order_must_be_complete(self):
        s = enumerate_simplex(2, 2)
        with pytest.raises(ValueError):
            fully_granular(s, [(0, 2), (1, 1)])
        with pytest.raises(ValueError):
            fully_granular(s, [(0, 2), (0, 2), (2, 0)])

    def test_index_outside(self):
        with pytest.raises(ValueError):
            index_of((1, 1, 1), default_granular(3, 4))


def test_text_roundtrip():
    c = spiral_order(5)
    back = CoveringCollection.from_text(c.to_text())
    np.testing.assert_array_equal(back.ranks, c.ranks)
    assert back.kind == c.kind and back.checkpoints == c.checkpoints


def test_collection_masses_direct_sum():
    c = default_granular(3, 4)
    thetas = np.array([[0.2, 0.3, 0.5], [1.0, 0.0, 0.0]])
    inner, outer = collection_masses(thetas, c)
    probs = np.exp(log_pmf_matrix(thetas, c.simplex.outcomes, 4))
    for k in range(c.kappa + 1):
        np.testing.assert_allclose(inner[:, k], probs[:, c.ranks <= k].sum(axis=1), atol=1e-15)
        np.testing.assert_allclose(outer[:, k], probs[:, c.ranks > k].sum(axis=1), atol=1e-15)


def test_region_membership_matches_matrix():
    c = spiral_order(4)
    grid = simplex_grid(3, 10)
    acc = region_accept_matrix(grid, c, 0.1)
    for g in range(0, len(grid), 7):
        for j, x in enumerate(c.simplex.outcomes):
            assert acc[g, j] == region_membership(grid[g], x, 0.1, c)


def test_reverse_region_bounded_coverage():
    # coverage of the reverse region is mu(x : mu(A_{k_x}) <= 1 - alpha) <= 1 - alpha
    c = default_granular(3, 4)
    theta = (0.3, 0.3, 0.4)
    probs = np.exp(log_pmf_matrix(np.array([theta]), c.simplex.outcomes, 4))[0]
    cover = sum(p for p, x in zip(probs, c.simplex.outcomes) if reverse_region_mass(theta, x, 0.1, c))
    assert cover <= 0.9 + 1e-12


@pytest.mark.parametrize("n", [1, 4, 10, 17])
def test_symmetrized_bottom_to_top_is_clopper_pearson(n):
    c = bottom_to_top(n)
    for x1 in range(n + 1):
        region = symmetrized_region((x1, n - x1), 0.05, c)
        lo, hi = interval_from_predicate(lambda t: region((t, 1 - t)), x1 / n, mesh=400)
        iv = clopper_pearson_interval(x1, n, 0.05)
        assert lo == pytest.approx(iv.lower, abs=1e-8)
        assert hi == pytest.approx(iv.upper, abs=1e-8)


def test_symmetrized_matrix_matches_predicate():
    c = spiral_order(3)
    grid = simplex_grid(3, 12)
    acc = symmetrized_accept_matrix(grid, c, 0.1)
    for j, x in enumerate(c.simplex.outcomes):
        np.testing.assert_array_equal(acc[:, j], symmetrized_region(x, 0.1, c).members(grid))


def test_interval_from_predicate_rejects_bad_start():
    with pytest.raises(ValueError):
        interval_from_predicate(lambda t: 0.2 < t < 0.4, 0.5)
    lo, hi = interval_from_predicate(lambda t: 0.2 <= t <= 0.4, 0.3)
    assert lo == pytest.approx(0.2, abs=1e-10) and hi == pytest.approx(0.4, abs=1e-10)


def test_permutation_invariance_of_full_set():
    c = spiral_order(6)
    assert is_permutation_invariant(c, c.kappa)
    assert is_permutation_invariant(c, 0)
    ks = [k for k in range(c.kappa + 1) if is_permutation_invariant(c, k)]
    assert set(c.checkpoints) <= set(ks)
    # the outcome sets of ring ends are unions of orbits
    for k in c.checkpoints:
        members = {tuple(r) for r in set_at(c, k)}
        for row in members:
            assert all(tuple(row[i] for i in p) in members for p in itertools.permutations(range(3)))
