"""Exact coverage and mean-volume evaluation of confidence-region methods.

Coverage at p is ``sum_x mu_p(x) 1[p ∈ R(x)]`` over all of E_d, never sampled.
Mean volume at p is ``sum_x mu_p(x) vol(R(x))`` where each region volume is
read off a regular simplex grid (see :func:`multiconf.levelset.region_volume`).
The grid sweep is grid-point-major: for each grid point, acceptance of every
outcome is decided at once, so a level-set threshold is computed only once
per grid point.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from . import levelset
from .comparators import clopper_pearson_interval, score_accept_matrix, wald_interval, wilson_interval
from .core import (
    DiscreteSimplex,
    ProbabilityLike,
    as_probability,
    check_work,
    enumerate_simplex,
    iter_chunks,
    log_pmf_matrix,
    simplex_grid,
)
from .covering import CoveringCollection, default_granular, region_accept_matrix, spiral_order, symmetrized_accept_matrix

__all__ = [
    "METHOD_TAGS",
    "DEFAULT_MESH",
    "InapplicableMethodError",
    "MethodId",
    "CoverageReport",
    "VolumeReport",
    "Comparison",
    "acceptance",
    "exact_coverage",
    "coverage_grid",
    "coverage_curve",
    "region_volumes",
    "mean_volume",
    "volume_report",
    "compare",
    "default_mesh",
]

METHOD_TAGS = (
    "level-set",
    "level-set-refined",
    "clopper-pearson",
    "cp-multinomial",
    "wilson",
    "wald",
    "score",
    "covering",
)
_INTERVAL_METHODS = ("clopper-pearson", "wilson", "wald")
DEFAULT_MESH = {2: 200, 3: 100, 4: 52}


class InapplicableMethodError(ValueError):
    pass


@dataclass(frozen=True)
class MethodId:
    """A region construction.

    ``order`` selects the labeling of E_d for ``cp-multinomial``
    (``"spiral"`` for d = 3 only, or ``"lex"``); ``collection`` supplies the
    covering collection for ``covering`` (and optionally ``cp-multinomial``).
    """

    tag: str
    order: str | None = None
    collection: CoveringCollection | None = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        if self.tag not in METHOD_TAGS:
            raise ValueError(f"unknown method {self.tag!r}; choose from {', '.join(METHOD_TAGS)}")
        if self.order not in (None, "spiral", "lex"):
            raise ValueError(f"unknown order {self.order!r}")
        if self.tag == "covering" and self.collection is None:
            raise ValueError("the covering method needs a collection")

    @classmethod
    def parse(cls, text: str | "MethodId") -> "MethodId":
        if isinstance(text, MethodId):
            return text
        text = text.strip()
        if text.endswith(")") and "(" in text:
            tag, order = text[:-1].split("(", 1)
            return cls(tag.strip(), order.strip())
        return cls(text)

    @property
    def label(self) -> str:
        return f"{self.tag}({self.order})" if self.order else self.tag

    def check(self, d: int, n: int | None = None) -> None:
        if self.tag in _INTERVAL_METHODS and d != 2:
            raise InapplicableMethodError(f"{self.tag} is only defined for d = 2, got d = {d}")
        if self.order == "spiral" and d != 3:
            raise InapplicableMethodError("the spiral order exists only for d = 3")
        if self.collection is not None:
            if self.collection.d != d or (n is not None and self.collection.n != n):
                raise InapplicableMethodError("collection does not match (d, n)")

    def collection_for(self, d: int, n: int) -> CoveringCollection:
        if self.collection is not None:
            return self.collection
        if self.order == "lex" or (self.order is None and d != 3):
            simplex = enumerate_simplex(d, n)
            return CoveringCollection(simplex, np.arange(1, len(simplex) + 1), "fully-granular")
        return spiral_order(n) if self.order == "spiral" else default_granular(d, n)


def _interval_bounds(method: MethodId, n: int, alpha: float) -> np.ndarray:
    make = {
        "clopper-pearson": clopper_pearson_interval,
        "wilson": wilson_interval,
        "wald": lambda x1, n, a: wald_interval(x1, n, a, warn=False),
    }[method.tag]
    bounds = np.empty((n + 1, 2))
    for x1 in range(n + 1):
        iv = make(x1, n, alpha)
        bounds[x1] = iv.lower, iv.upper
    return bounds


def acceptance(method: MethodId | str, thetas: np.ndarray, simplex: DiscreteSimplex, alpha: float) -> np.ndarray:
    """(G, N) booleans: theta_g ∈ R_alpha(x_j) for the given method."""
    method = MethodId.parse(method)
    method.check(simplex.d, simplex.n)
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    if thetas.shape[1] != simplex.d:
        raise ValueError("dimension mismatch between grid and outcomes")
    tag = method.tag
    if tag == "level-set":
        return levelset.accept_matrix(thetas, simplex, alpha)
    if tag == "level-set-refined":
        return levelset.refined_accept_matrix(thetas, simplex, alpha)
    if tag == "score":
        return score_accept_matrix(thetas, simplex.outcomes, alpha)
    if tag in _INTERVAL_METHODS:
        bounds = _interval_bounds(method, simplex.n, alpha)[simplex.outcomes[:, 0]]
        t = thetas[:, :1]
        return (bounds[None, :, 0] <= t) & (t <= bounds[None, :, 1])
    collection = method.collection_for(simplex.d, simplex.n)
    if tag == "cp-multinomial":
        return symmetrized_accept_matrix(thetas, collection, alpha)
    return region_accept_matrix(thetas, collection, alpha)


def _pmf_rows(ps: np.ndarray, simplex: DiscreteSimplex) -> np.ndarray:
    return np.exp(log_pmf_matrix(ps, simplex.outcomes, simplex.n))


def exact_coverage(method: MethodId | str, p: ProbabilityLike, n: int, alpha: float) -> float:
    """P_p(p ∈ R_alpha(X)) by full enumeration of E_d."""
    p = as_probability(p)
    simplex = enumerate_simplex(p.d, n)
    row = np.asarray(p.entries)[None, :]
    acc = acceptance(method, row, simplex, alpha)[0]
    probs = _pmf_rows(row, simplex)[0]
    return min(1.0, math.fsum(probs[acc]))


def _coverages(method: MethodId, ps: np.ndarray, simplex: DiscreteSimplex, alpha: float) -> np.ndarray:
    out = np.empty(len(ps))
    for sl in iter_chunks(len(ps), simplex.outcomes.size):
        acc = acceptance(method, ps[sl], simplex, alpha)
        probs = _pmf_rows(ps[sl], simplex)
        # rounding in the pmf can push a full sum a few ulps above 1
        out[sl] = [min(1.0, math.fsum(row[mask])) for row, mask in zip(probs, acc)]
    return out


def coverage_grid(d: int, step: float, p1_max: float = 0.5) -> np.ndarray:
    """Parameter grid for coverage sweeps.

    d = 2: p_1 = 0, step, ... up to ``p1_max``. d >= 3: the barycentric grid
    with mesh 1/step.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    mesh = round(1.0 / step)
    if abs(mesh * step - 1.0) > 1e-9:
        raise ValueError(f"step {step} must divide 1")
    if d == 2:
        k = np.arange(0, int(math.floor(p1_max * mesh + 1e-9)) + 1)
        p1 = k / mesh
        return np.column_stack([p1, 1.0 - p1])
    return simplex_grid(d, mesh)


@dataclass(frozen=True)
class CoverageReport:
    method: str
    d: int
    n: int
    alpha: float
    points: np.ndarray
    coverage: np.ndarray

    @property
    def minimum(self) -> float:
        return float(self.coverage.min())

    def to_csv(self) -> str:
        return _write_csv(_long_header(self.d), _long_rows(self.points, self.method, self.coverage, None))


def coverage_curve(method: MethodId | str, d: int, n: int, alpha: float, step: float) -> CoverageReport:
    method = MethodId.parse(method)
    method.check(d, n)
    ps = coverage_grid(d, step)
    simplex = enumerate_simplex(d, n)
    return CoverageReport(method.label, d, n, alpha, ps, _coverages(method, ps, simplex, alpha))


def default_mesh(d: int) -> int:
    return DEFAULT_MESH.get(d, 20)


def region_volumes(
    method: MethodId | str,
    d: int,
    n: int,
    alpha: float,
    mesh: int,
    max_work: int | None = None,
) -> np.ndarray:
    """Grid volume estimate of R_alpha(x) for every x in E_d (lexicographic order)."""
    method = MethodId.parse(method)
    method.check(d, n)
    if mesh < 1:
        raise ValueError("mesh must be >= 1")
    simplex = enumerate_simplex(d, n)
    grid = simplex_grid(d, mesh)
    check_work(len(grid), len(simplex), max_work)
    n_out = len(simplex)
    counts = np.zeros(n_out, dtype=np.int64)
    lo = np.full(n_out, np.inf)
    hi = np.full(n_out, -np.inf)
    for sl in iter_chunks(len(grid), 4 * simplex.outcomes.size):
        acc = acceptance(method, grid[sl], simplex, alpha)
        counts += acc.sum(axis=0)
        if d == 2:
            t = grid[sl, :1]
            lo = np.minimum(lo, np.where(acc, t, np.inf).min(axis=0))
            hi = np.maximum(hi, np.where(acc, t, -np.inf).max(axis=0))
    if d == 2:
        return np.where(counts > 0, hi - lo, 0.0)
    return counts / len(grid) / math.factorial(d - 1)


def mean_volume(
    method: MethodId | str,
    p: ProbabilityLike,
    n: int,
    alpha: float,
    mesh: int | None = None,
    volumes: np.ndarray | None = None,
) -> float:
    """E_p[vol(R_alpha(X))]; for d = 2 this is the mean interval width."""
    p = as_probability(p)
    mesh = default_mesh(p.d) if mesh is None else mesh
    if mesh < 10:
        raise ValueError("mesh must be >= 10")
    if volumes is None:
        volumes = region_volumes(method, p.d, n, alpha, mesh)
    simplex = enumerate_simplex(p.d, n)
    probs = _pmf_rows(np.asarray(p.entries)[None, :], simplex)[0]
    return math.fsum(probs * volumes)


@dataclass(frozen=True)
class VolumeReport:
    method: str
    d: int
    n: int
    alpha: float
    mesh: int
    points: np.ndarray
    mean_volume: np.ndarray

    @property
    def measure(self) -> str:
        return "width" if self.d == 2 else "projected-volume"


def volume_report(method: MethodId | str, d: int, n: int, alpha: float, step: float, mesh: int | None = None) -> VolumeReport:
    method = MethodId.parse(method)
    mesh = default_mesh(d) if mesh is None else mesh
    vols = region_volumes(method, d, n, alpha, mesh)
    ps = coverage_grid(d, step)
    probs = _pmf_rows(ps, enumerate_simplex(d, n))
    means = np.array([math.fsum(row * vols) for row in probs])
    return VolumeReport(method.label, d, n, alpha, mesh, ps, means)


# --- comparison tables --------------------------------------------------------


def _fmt(v: float) -> str:
    return f"{v:.12g}"


def _long_header(d: int) -> list[str]:
    return [f"p{i + 1}" for i in range(d)] + ["method", "coverage", "mean_volume"]


def _long_rows(points, method, coverage, volume) -> Iterator[list[str]]:
    for i, pt in enumerate(points):
        yield [_fmt(v) for v in pt] + [
            method,
            _fmt(coverage[i]) if coverage is not None else "",
            _fmt(volume[i]) if volume is not None else "",
        ]


def _write_csv(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _as_number(text: str):
    return None if text == "" else float(text)


@dataclass(frozen=True)
class Comparison:
    """Per-p coverage and mean volume for several methods on a shared grid."""

    methods: tuple[str, ...]
    d: int
    n: int
    alpha: float
    mesh: int
    points: np.ndarray
    coverage: dict[str, np.ndarray]
    volume: dict[str, np.ndarray]

    def pairs(self) -> list[tuple[str, str]]:
        return list(itertools.combinations(self.methods, 2))

    def long_table(self) -> tuple[list[str], list[list[str]]]:
        rows = []
        for m in self.methods:
            rows.extend(_long_rows(self.points, m, self.coverage[m], self.volume[m]))
        return _long_header(self.d), rows

    def wide_table(self) -> tuple[list[str], list[list[str]]]:
        header = [f"p{i + 1}" for i in range(self.d)]
        for m in self.methods:
            header += [f"coverage[{m}]", f"mean_volume[{m}]"]
        for a, b in self.pairs():
            header += [f"coverage_diff[{a}-{b}]", f"volume_diff[{a}-{b}]"]
        rows = []
        for i, pt in enumerate(self.points):
            row = [_fmt(v) for v in pt]
            for m in self.methods:
                row += [_fmt(self.coverage[m][i]), _fmt(self.volume[m][i])]
            for a, b in self.pairs():
                row += [
                    _fmt(self.coverage[a][i] - self.coverage[b][i]),
                    _fmt(self.volume[a][i] - self.volume[b][i]),
                ]
            rows.append(row)
        return header, rows

    def to_csv(self) -> str:
        return _write_csv(*self.long_table())

    def differences_csv(self) -> str:
        return _write_csv(*self.wide_table())

    def to_json(self) -> str:
        header, rows = self.long_table()
        records = []
        for row in rows:
            rec = {}
            for key, value in zip(header, row):
                rec[key] = value if key == "method" else _as_number(value)
            records.append(rec)
        whdr, wrows = self.wide_table()
        wide = [{k: _as_number(v) for k, v in zip(whdr, row)} for row in wrows]
        payload = {
            "d": self.d,
            "n": self.n,
            "alpha": self.alpha,
            "mesh": self.mesh,
            "measure": "width" if self.d == 2 else "projected-volume",
            "methods": list(self.methods),
            "rows": records,
            "differences": wide,
        }
        return json.dumps(payload, indent=2) + "\n"

    def min_coverage(self) -> dict[str, float]:
        return {m: float(self.coverage[m].min()) for m in self.methods}


def compare(
    methods: Sequence[MethodId | str],
    d: int,
    n: int,
    alpha: float = 0.05,
    step: float | None = None,
    mesh: int | None = None,
) -> Comparison:
    if not methods:
        raise ValueError("at least one method is required")
    parsed = [MethodId.parse(m) for m in methods]
    for m in parsed:
        m.check(d, n)
    labels = tuple(m.label for m in parsed)
    if len(set(labels)) != len(labels):
        raise ValueError("duplicate methods")
    step = (0.01 if d == 2 else 0.05) if step is None else step
    mesh = default_mesh(d) if mesh is None else mesh
    ps = coverage_grid(d, step)
    simplex = enumerate_simplex(d, n)
    probs = _pmf_rows(ps, simplex)
    coverage, volume = {}, {}
    for m, label in zip(parsed, labels):
        coverage[label] = _coverages(m, ps, simplex, alpha)
        vols = region_volumes(m, d, n, alpha, mesh)
        volume[label] = np.array([math.fsum(row * vols) for row in probs])
    return Comparison(labels, d, n, alpha, mesh, ps, coverage, volume)
