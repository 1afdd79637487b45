import json
import math

import numpy as np
import pytest

from multiconf.comparators import clopper_pearson_interval
from multiconf.core import enumerate_simplex, log_pmf_matrix
from multiconf.covering import spiral_order
from multiconf.evaluation import (
    InapplicableMethodError,
    MethodId,
    compare,
    coverage_curve,
    coverage_grid,
    exact_coverage,
    mean_volume,
    region_volumes,
    volume_report,
)
from multiconf.levelset import acceptance_set


def binomial_probs(p1, n):
    return np.array([math.comb(n, k) * p1**k * (1 - p1) ** (n - k) for k in range(n + 1)])


class TestMethodId:
    def test_parse_and_label(self):
        m = MethodId.parse("cp-multinomial(spiral)")
        assert m.tag == "cp-multinomial" and m.order == "spiral" and m.label == "cp-multinomial(spiral)"
        assert MethodId.parse(" score ").label == "score"

    @pytest.mark.parametrize("text", ["bogus", "cp-multinomial(zigzag)", "covering"])
    def test_invalid(self, text):
        with pytest.raises(ValueError):
            MethodId.parse(text)

    def test_inapplicable(self):
        with pytest.raises(InapplicableMethodError):
            MethodId("wilson").check(3)
        with pytest.raises(InapplicableMethodError):
            MethodId("cp-multinomial", "spiral").check(2)
        with pytest.raises(InapplicableMethodError):
            MethodId("covering", collection=spiral_order(4)).check(3, 5)


def test_coverage_grid():
    g = coverage_grid(2, 0.01)
    assert len(g) == 51 and g[-1, 0] == 0.5
    assert len(coverage_grid(3, 0.05)) == 231
    with pytest.raises(ValueError):
        coverage_grid(2, 0.03)
    with pytest.raises(ValueError):
        coverage_grid(2, -0.1)


@pytest.mark.parametrize("p,n", [((0.3, 0.7), 10), ((0.2, 0.3, 0.5), 6), ((0.1, 0.2, 0.3, 0.4), 4)])
def test_level_set_coverage_is_acceptance_mass(p, n):
    assert exact_coverage("level-set", p, n, 0.05) == pytest.approx(acceptance_set(p, 0.05, n).mass, abs=1e-12)


@pytest.mark.parametrize("p1", [0.0, 0.13, 0.5])
def test_clopper_pearson_coverage_by_hand(p1):
    n = 12
    probs = binomial_probs(p1, n)
    hand = sum(probs[k] for k in range(n + 1) if p1 in clopper_pearson_interval(k, n, 0.05))
    assert exact_coverage("clopper-pearson", (p1, 1 - p1), n, 0.05) == pytest.approx(hand, abs=1e-12)
    assert hand >= 0.95


def test_coverage_never_exceeds_one():
    report = coverage_curve("level-set", 2, 10, 0.05, 0.1)
    assert report.coverage.max() <= 1.0
    assert report.minimum >= 0.95


def test_wald_undercovers():
    assert coverage_curve("wald", 2, 10, 0.05, 0.01).minimum < 0.5


def test_cp_multinomial_d2_matches_clopper_pearson():
    for p1 in (0.05, 0.31, 0.5):
        a = exact_coverage("cp-multinomial", (p1, 1 - p1), 9, 0.05)
        b = exact_coverage("clopper-pearson", (p1, 1 - p1), 9, 0.05)
        assert a == pytest.approx(b, abs=1e-9)


def test_covering_method_with_collection():
    m = MethodId("covering", collection=spiral_order(4))
    cov = coverage_curve(m, 3, 4, 0.1, 0.25)
    assert cov.minimum >= 0.9 - 1e-12


def test_mean_width_against_interval_route():
    n, p1 = 10, 0.5
    probs = binomial_probs(p1, n)
    widths = [clopper_pearson_interval(k, n, 0.05).width for k in range(n + 1)]
    hand = float(np.dot(probs, widths))
    got = mean_volume("clopper-pearson", (p1, 1 - p1), n, 0.05, mesh=2000)
    assert got == pytest.approx(hand, abs=2e-3)


def test_mean_volume_d3_projected():
    # the full-simplex region has projected volume 1/2
    vols = region_volumes("level-set", 3, 2, 0.999, 20)
    assert vols.max() <= 0.5
    assert mean_volume("level-set", (0.2, 0.3, 0.5), 2, 0.05, mesh=20) <= 0.5
    with pytest.raises(ValueError):
        mean_volume("level-set", (0.2, 0.3, 0.5), 2, 0.05, mesh=5)


def test_volume_report_measure():
    r = volume_report("level-set", 2, 5, 0.05, 0.1, mesh=100)
    assert r.measure == "width" and len(r.mean_volume) == 6
    assert np.all(np.diff(r.mean_volume) >= -1e-12)


class TestCompare:
    def test_tables_agree(self):
        c = compare(["level-set", "score"], 2, 6, 0.05, step=0.1, mesh=50)
        payload = json.loads(c.to_json())
        rows = c.to_csv().splitlines()
        assert rows[0] == "p1,p2,method,coverage,mean_volume"
        assert len(rows) - 1 == len(payload["rows"]) == 2 * len(c.points)
        for line, rec in zip(rows[1:], payload["rows"]):
            fields = line.split(",")
            assert float(fields[3]) == rec["coverage"] and float(fields[4]) == rec["mean_volume"]
        diff = c.differences_csv().splitlines()
        assert "coverage_diff[level-set-score]" in diff[0]

    def test_difference_column(self):
        c = compare(["level-set", "clopper-pearson"], 2, 8, 0.05, step=0.1, mesh=50)
        header, rows = c.wide_table()
        i = header.index("volume_diff[level-set-clopper-pearson]")
        a = header.index("mean_volume[level-set]")
        b = header.index("mean_volume[clopper-pearson]")
        for row in rows:
            assert float(row[i]) == pytest.approx(float(row[a]) - float(row[b]), abs=1e-11)

    def test_errors(self):
        with pytest.raises(ValueError):
            compare([], 2, 5)
        with pytest.raises(ValueError):
            compare(["score", "score"], 2, 5)
        with pytest.raises(InapplicableMethodError):
            compare(["wilson"], 3, 5)


def test_enumeration_is_exhaustive():
    p = np.array([[0.2, 0.3, 0.5]])
    s = enumerate_simplex(3, 7)
    assert np.exp(log_pmf_matrix(p, s.outcomes, 7)).sum() == pytest.approx(1.0, abs=1e-14)
