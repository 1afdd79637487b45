"""Likelihood level-set acceptance sets and the confidence region they define.

For a parameter theta, the acceptance set K(theta, alpha) is the smallest
upper level set ``{x : mu_theta(x) >= u}`` of the multinomial pmf with mass at
least 1 - alpha; u = u(theta, alpha) is its threshold. The confidence region
of an observation x collects every theta whose acceptance set contains x.

Pmf values are compared in log space. Two values closer than
``TIE_RTOL * max(1, |log u|)`` count as equal, so a tie tier at the
threshold is never split by rounding.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

import numpy as np

from .core import (
    DiscreteSimplex,
    OutcomeLike,
    ProbabilityLike,
    ProbabilityVector,
    as_outcome,
    as_probability,
    check_work,
    enumerate_simplex,
    iter_chunks,
    log_pmf_matrix,
    simplex_grid,
)

__all__ = [
    "TIE_RTOL",
    "AcceptanceSet",
    "RefinedAcceptanceSet",
    "RegionGrid",
    "log_thresholds",
    "likelihood_threshold",
    "acceptance_set",
    "acceptance_mask",
    "region_contains",
    "accept_matrix",
    "iter_accept",
    "region_grid",
    "region_volume",
    "refine_acceptance_set",
    "refined_accept_matrix",
    "refined_region_contains",
]

TIE_RTOL = 1e-12
REFINE_TIEBREAK_MESH = 20


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")


def _cutoff(log_u: np.ndarray) -> np.ndarray:
    return log_u - TIE_RTOL * np.maximum(1.0, np.abs(log_u))


def log_thresholds(log_pmfs: np.ndarray, alpha: float) -> np.ndarray:
    """log u(theta, alpha) for each row of a (G, N) log-pmf matrix.

    Sorting a row in decreasing order, u is the first value at which the
    running mass reaches 1 - alpha.
    """
    log_pmfs = np.atleast_2d(log_pmfs)
    ordered = -np.sort(-log_pmfs, axis=1)
    running = np.cumsum(np.exp(ordered), axis=1)
    reached = running >= 1.0 - alpha
    idx = np.where(reached.any(axis=1), reached.argmax(axis=1), log_pmfs.shape[1] - 1)
    return ordered[np.arange(len(ordered)), idx]


def acceptance_mask(log_pmfs: np.ndarray, alpha: float) -> np.ndarray:
    """(G, N) booleans: x_j ∈ K(theta_g, alpha)."""
    log_u = log_thresholds(log_pmfs, alpha)
    return log_pmfs >= _cutoff(log_u)[:, None]


def _theta_row(theta: ProbabilityLike, d: int | None = None) -> tuple[ProbabilityVector, np.ndarray]:
    theta = as_probability(theta)
    if d is not None and theta.d != d:
        raise ValueError(f"dimension mismatch: theta has d={theta.d}, expected {d}")
    return theta, np.asarray(theta.entries)[None, :]


def likelihood_threshold(theta: ProbabilityLike, alpha: float, n: int) -> float:
    """u(theta, alpha): the largest u whose upper level set has mass >= 1 - alpha."""
    _check_alpha(alpha)
    theta, row = _theta_row(theta)
    simplex = enumerate_simplex(theta.d, n)
    return float(math.exp(log_thresholds(log_pmf_matrix(row, simplex.outcomes, n), alpha)[0]))


@dataclass(frozen=True)
class AcceptanceSet:
    theta: ProbabilityVector
    alpha: float
    threshold: float
    members: np.ndarray
    mass: float

    @property
    def gamma(self) -> float:
        """Excess coverage slack 1 - mass, in [0, alpha]."""
        return 1.0 - self.mass

    def __contains__(self, x) -> bool:
        key = np.asarray(tuple(x))
        return bool(np.any(np.all(self.members == key, axis=1)))

    def __len__(self) -> int:
        return len(self.members)


def _acceptance(theta: ProbabilityVector, alpha: float, simplex: DiscreteSimplex):
    log_p = log_pmf_matrix(np.asarray(theta.entries)[None, :], simplex.outcomes, simplex.n)[0]
    log_u = log_thresholds(log_p[None, :], alpha)[0]
    mask = log_p >= _cutoff(np.asarray(log_u))
    return log_p, float(log_u), mask


def acceptance_set(theta: ProbabilityLike, alpha: float, n: int) -> AcceptanceSet:
    """K(theta, alpha), with every outcome tied at the threshold included."""
    _check_alpha(alpha)
    theta = as_probability(theta)
    simplex = enumerate_simplex(theta.d, n)
    log_p, log_u, mask = _acceptance(theta, alpha, simplex)
    mass = math.fsum(np.exp(log_p[mask]))
    return AcceptanceSet(theta, alpha, math.exp(log_u), simplex.outcomes[mask], mass)


def region_contains(theta: ProbabilityLike, x: OutcomeLike, alpha: float) -> bool:
    """theta ∈ R_alpha(x) iff mu_theta(x) >= u(theta, alpha)."""
    _check_alpha(alpha)
    x = as_outcome(x)
    theta, _ = _theta_row(theta, x.d)
    simplex = enumerate_simplex(x.d, x.n)
    log_p, _, mask = _acceptance(theta, alpha, simplex)
    return bool(mask[simplex.index(x)])


def iter_accept(
    thetas: np.ndarray,
    simplex: DiscreteSimplex,
    alpha: float,
    workers: int = 1,
) -> Iterator[tuple[slice, np.ndarray, np.ndarray]]:
    """Yield ``(rows, log_pmfs, accept)`` chunk by chunk over a set of grid points.

    Each threshold is computed once per grid point and reused for every
    outcome. Chunks come back in index order whatever the worker count.
    """
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    slices = list(iter_chunks(len(thetas), simplex.outcomes.size))

    def work(sl: slice):
        log_p = log_pmf_matrix(thetas[sl], simplex.outcomes, simplex.n)
        return sl, log_p, acceptance_mask(log_p, alpha)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            yield from pool.map(work, slices)
    else:
        for sl in slices:
            yield work(sl)


def accept_matrix(thetas: np.ndarray, simplex: DiscreteSimplex, alpha: float) -> np.ndarray:
    """(G, N) booleans: theta_g ∈ R_alpha(x_j)."""
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    out = np.empty((len(thetas), len(simplex)), dtype=bool)
    for sl, _, acc in iter_accept(thetas, simplex, alpha):
        out[sl] = acc
    return out


def region_volume(members: np.ndarray, grid: np.ndarray) -> float:
    """Volume estimate of a region from its grid members.

    d = 2: width max - min of member abscissae. d >= 3: member fraction times
    the volume 1/(d-1)! of the simplex projected on its first d-1 coordinates.
    """
    d = grid.shape[1]
    if not members.any():
        return 0.0
    if d == 2:
        first = grid[members, 0]
        return float(first.max() - first.min())
    return float(members.sum()) / len(grid) / math.factorial(d - 1)


@dataclass(frozen=True)
class RegionGrid:
    x: tuple[int, ...]
    alpha: float
    mesh: int
    points: np.ndarray
    members: np.ndarray
    volume: float

    @property
    def member_points(self) -> np.ndarray:
        return self.points[self.members]

    @property
    def width(self) -> float | None:
        return self.volume if self.points.shape[1] == 2 else None

    def bounds(self) -> list[tuple[float, float]]:
        """Per-coordinate (min, max) over the member points."""
        pts = self.member_points
        if len(pts) == 0:
            return []
        return [(float(lo), float(hi)) for lo, hi in zip(pts.min(axis=0), pts.max(axis=0))]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        d = self.points.shape[1]
        writer.writerow([f"p{i + 1}" for i in range(d)] + ["member"])
        for pt, m in zip(self.points, self.members):
            writer.writerow([f"{v:.12g}" for v in pt] + [int(m)])
        return buf.getvalue()


def region_grid(
    x: OutcomeLike,
    alpha: float,
    mesh: int,
    max_work: int | None = None,
    workers: int = 1,
) -> RegionGrid:
    """Level-set region of x evaluated on the regular simplex grid of the given mesh."""
    _check_alpha(alpha)
    x = as_outcome(x)
    simplex = enumerate_simplex(x.d, x.n)
    grid = simplex_grid(x.d, mesh)
    check_work(len(grid), len(simplex), max_work)
    j = simplex.index(x)
    members = np.empty(len(grid), dtype=bool)
    for sl, _, acc in iter_accept(grid, simplex, alpha, workers):
        members[sl] = acc[:, j]
    return RegionGrid(x.counts, alpha, mesh, grid, members, region_volume(members, grid))


# --- refinement -------------------------------------------------------------


@dataclass(frozen=True)
class RefinedAcceptanceSet:
    base: AcceptanceSet
    removed: np.ndarray
    added: np.ndarray
    members: np.ndarray
    mass: float

    @property
    def delta(self) -> float:
        return 1.0 - self.mass

    @property
    def changed(self) -> bool:
        return len(self.removed) > 0

    def __contains__(self, x) -> bool:
        key = np.asarray(tuple(x))
        return bool(np.any(np.all(self.members == key, axis=1)))


@lru_cache(maxsize=32)
def _tiebreak_volumes(d: int, n: int, alpha: float) -> np.ndarray:
    """Level-set region volume of every outcome on the coarse tie-break grid."""
    simplex = enumerate_simplex(d, n)
    grid = simplex_grid(d, REFINE_TIEBREAK_MESH)
    acc = accept_matrix(grid, simplex, alpha)
    vols = np.array([region_volume(acc[:, j], grid) for j in range(len(simplex))])
    vols.setflags(write=False)
    return vols


def _refine_swap(log_p: np.ndarray, mask: np.ndarray, alpha: float, d: int, n: int) -> tuple[int, int] | None:
    """Pick (y, w): drop y from K, add w, or None when no swap keeps mass >= 1 - alpha.

    y is the smallest-pmf member of K. Candidates w are taken from E \\ K in
    decreasing pmf order; the last one that keeps the mass >= 1 - alpha
    gives the smallest admissible excess. Equal-pmf candidates are
    separated by the smallest coarse-grid region volume, then by
    lexicographic position.
    """
    probs = np.exp(log_p)
    inside = np.flatnonzero(mask)
    outside = np.flatnonzero(~mask & np.isfinite(log_p))
    if len(outside) == 0 or len(inside) == 0:
        return None
    y = int(inside[np.argmin(log_p[inside])])
    mass = math.fsum(probs[inside])
    target = 1.0 - alpha
    base = mass - probs[y]
    order = outside[np.argsort(-log_p[outside], kind="stable")]
    candidates = [w for w in order if base + probs[w] >= target and probs[w] < probs[y]]
    if not candidates:
        return None
    # candidates are sorted by decreasing pmf; the last tier is the least conservative
    lowest = log_p[candidates[-1]]
    tol = TIE_RTOL * max(1.0, abs(lowest))
    tier = [w for w in candidates if log_p[w] <= lowest + tol]
    if len(tier) > 1:
        vols = _tiebreak_volumes(d, n, alpha)
        tier.sort(key=lambda w: (vols[w], w))
    return y, int(tier[0])


def refine_acceptance_set(theta: ProbabilityLike, alpha: float, n: int) -> RefinedAcceptanceSet:
    """Swap one outcome of K(theta, alpha) for one outside it to lower the excess mass.

    The returned set keeps mass >= 1 - alpha and, when a swap applies, has
    strictly less mass than K. Without an admissible swap the base set is
    returned unchanged.
    """
    base = acceptance_set(theta, alpha, n)
    simplex = enumerate_simplex(base.theta.d, n)
    log_p, _, mask = _acceptance(base.theta, alpha, simplex)
    empty = np.empty((0, simplex.d), dtype=np.int64)
    swap = _refine_swap(log_p, mask, alpha, simplex.d, n)
    if swap is None:
        return RefinedAcceptanceSet(base, empty, empty, base.members, base.mass)
    y, w = swap
    new_mask = mask.copy()
    new_mask[y] = False
    new_mask[w] = True
    mass = math.fsum(np.exp(log_p[new_mask]))
    return RefinedAcceptanceSet(
        base, simplex.outcomes[[y]], simplex.outcomes[[w]], simplex.outcomes[new_mask], mass
    )


def refined_accept_matrix(thetas: np.ndarray, simplex: DiscreteSimplex, alpha: float) -> np.ndarray:
    """(G, N) booleans for the refined region: x_j ∈ L(theta_g, alpha)."""
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    out = np.empty((len(thetas), len(simplex)), dtype=bool)
    for sl, log_p, acc in iter_accept(thetas, simplex, alpha):
        for i in range(acc.shape[0]):
            swap = _refine_swap(log_p[i], acc[i], alpha, simplex.d, simplex.n)
            if swap is not None:
                acc[i, swap[0]] = False
                acc[i, swap[1]] = True
        out[sl] = acc
    return out


def refined_region_contains(theta: ProbabilityLike, x: OutcomeLike, alpha: float) -> bool:
    x = as_outcome(x)
    return x.counts in refine_acceptance_set(theta, alpha, x.n)
