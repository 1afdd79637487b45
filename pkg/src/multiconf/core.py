"""Exact multinomial probabilities and enumeration of the discrete and continuous simplices.

Everything here works in log space with a precomputed log-factorial table.
Log-pmf values are formed from one term per coordinate,
``x_i * log(p_i) - log(x_i!)``, and the terms are sorted before summation so
that permuting the categories of ``p`` and ``x`` together gives a
bit-identical result.
"""

from __future__ import annotations

import math
from contextlib import contextmanager
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, Sequence, Union

import numpy as np

__all__ = [
    "DEFAULT_MAX_POINTS",
    "DEFAULT_MAX_WORK",
    "SUM_TOLERANCE",
    "CAPS",
    "resource_caps",
    "ResourceLimitError",
    "ProbabilityVector",
    "OutcomeVector",
    "DiscreteSimplex",
    "LogFactorialTable",
    "log_factorials",
    "as_probability",
    "as_outcome",
    "log_pmf",
    "log_pmf_matrix",
    "enumerate_simplex",
    "simplex_grid",
    "compositions",
    "count_compositions",
    "iter_chunks",
    "check_work",
]

DEFAULT_MAX_POINTS = 10_000_000
DEFAULT_MAX_WORK = 500_000_000
SUM_TOLERANCE = 1e-12

# elements per (grid chunk x outcomes x d) temporary in log_pmf_matrix
_CHUNK_ELEMENTS = 2_000_000


class ResourceLimitError(RuntimeError):
    """Raised when an enumeration or grid would exceed its configured cap."""


@dataclass
class ResourceCaps:
    """Process-wide defaults for the size guards.

    ``max_points`` bounds |E_d| and grid sizes; ``max_work`` bounds
    grid points x outcomes in region sweeps.
    """

    max_points: int = DEFAULT_MAX_POINTS
    max_work: int = DEFAULT_MAX_WORK


CAPS = ResourceCaps()


@contextmanager
def resource_caps(max_points: int | None = None, max_work: int | None = None):
    saved = (CAPS.max_points, CAPS.max_work)
    if max_points is not None:
        CAPS.max_points = max_points
    if max_work is not None:
        CAPS.max_work = max_work
    try:
        yield CAPS
    finally:
        CAPS.max_points, CAPS.max_work = saved


def check_work(grid_size: int, simplex_size: int, max_work: int | None = None) -> None:
    cap = CAPS.max_work if max_work is None else max_work
    if grid_size * simplex_size > cap:
        raise ResourceLimitError(
            f"{grid_size} grid points x {simplex_size} outcomes exceed the work cap {cap}"
        )


@dataclass(frozen=True)
class ProbabilityVector:
    """A point of the probability simplex.

    Entries must lie in [0, 1] and sum to one within ``SUM_TOLERANCE``.
    Use :meth:`normalized` to rescale arbitrary non-negative weights.
    """

    entries: tuple[float, ...]

    def __post_init__(self) -> None:
        entries = tuple(float(v) for v in self.entries)
        object.__setattr__(self, "entries", entries)
        if len(entries) < 2:
            raise ValueError("a probability vector needs at least 2 entries")
        if any(not (0.0 <= v <= 1.0) for v in entries):
            raise ValueError(f"entries must lie in [0, 1]: {entries}")
        total = math.fsum(entries)
        if abs(total - 1.0) > SUM_TOLERANCE:
            raise ValueError(f"entries sum to {total!r}, not 1")

    @classmethod
    def normalized(cls, weights: Sequence[float]) -> "ProbabilityVector":
        w = [float(v) for v in weights]
        if any(v < 0 for v in w):
            raise ValueError("weights must be non-negative")
        total = math.fsum(w)
        if total <= 0:
            raise ValueError("weights must have a positive sum")
        return cls(tuple(v / total for v in w))

    @property
    def d(self) -> int:
        return len(self.entries)

    def permuted(self, perm: Sequence[int]) -> "ProbabilityVector":
        return ProbabilityVector(tuple(self.entries[i] for i in perm))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype or float)

    def __iter__(self) -> Iterator[float]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, i):
        return self.entries[i]


@dataclass(frozen=True)
class OutcomeVector:
    """A lattice point of the discrete simplex: category counts summing to n."""

    counts: tuple[int, ...]

    def __post_init__(self) -> None:
        counts = tuple(int(c) for c in self.counts)
        if any(int(c) != c for c in self.counts):
            raise ValueError("counts must be integers")
        object.__setattr__(self, "counts", counts)
        if len(counts) < 2:
            raise ValueError("an outcome vector needs at least 2 counts")
        if any(c < 0 for c in counts):
            raise ValueError(f"counts must be non-negative: {counts}")

    @property
    def n(self) -> int:
        return sum(self.counts)

    @property
    def d(self) -> int:
        return len(self.counts)

    def permuted(self, perm: Sequence[int]) -> "OutcomeVector":
        return OutcomeVector(tuple(self.counts[i] for i in perm))

    def mle(self) -> ProbabilityVector:
        """The maximum likelihood estimate x / n."""
        if self.n == 0:
            raise ValueError("the MLE is undefined for n = 0")
        return ProbabilityVector(tuple(c / self.n for c in self.counts))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.counts, dtype=dtype or np.int64)

    def __iter__(self) -> Iterator[int]:
        return iter(self.counts)

    def __len__(self) -> int:
        return len(self.counts)

    def __getitem__(self, i):
        return self.counts[i]


ProbabilityLike = Union[ProbabilityVector, Sequence[float], np.ndarray]
OutcomeLike = Union[OutcomeVector, Sequence[int], np.ndarray]


def as_probability(p: ProbabilityLike) -> ProbabilityVector:
    return p if isinstance(p, ProbabilityVector) else ProbabilityVector(tuple(p))


def as_outcome(x: OutcomeLike, n: int | None = None) -> OutcomeVector:
    out = x if isinstance(x, OutcomeVector) else OutcomeVector(tuple(x))
    if n is not None and out.n != n:
        raise ValueError(f"counts {out.counts} sum to {out.n}, expected n={n}")
    return out


@dataclass(frozen=True)
class LogFactorialTable:
    """``values[k] == log(k!)`` for ``k = 0..n``."""

    values: np.ndarray

    @property
    def n(self) -> int:
        return len(self.values) - 1

    def covers(self, n: int) -> bool:
        return n <= self.n


@lru_cache(maxsize=None)
def log_factorials(n: int) -> LogFactorialTable:
    if n < 0:
        raise ValueError("n must be non-negative")
    values = np.array([math.lgamma(k + 1.0) for k in range(n + 1)])
    values[:2] = 0.0
    values.setflags(write=False)
    return LogFactorialTable(values)


def count_compositions(d: int, n: int) -> int:
    """Number of non-negative integer vectors of length d summing to n."""
    return math.comb(n + d - 1, d - 1)


def compositions(d: int, n: int, max_points: int | None = None) -> np.ndarray:
    """All compositions of n into d non-negative parts, lexicographic order.

    Returns an int64 array of shape (binomial(n+d-1, d-1), d).
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    if n < 0:
        raise ValueError("n must be >= 0")
    size = count_compositions(d, n)
    max_points = CAPS.max_points if max_points is None else max_points
    if size > max_points:
        raise ResourceLimitError(
            f"{size} compositions for d={d}, n={n} exceed the cap of {max_points}"
        )
    # rows[s] holds the compositions of s into the trailing k parts
    rows = [np.array([[s]], dtype=np.int64) for s in range(n + 1)]
    for _ in range(d - 1):
        new_rows = []
        for s in range(n + 1):
            blocks = [
                np.hstack([np.full((len(rows[s - a]), 1), a, dtype=np.int64), rows[s - a]])
                for a in range(s + 1)
            ]
            new_rows.append(np.vstack(blocks))
        rows = new_rows
    return rows[n]


@dataclass(frozen=True)
class DiscreteSimplex:
    """The data space: every count vector of length d summing to n, in lexicographic order."""

    d: int
    n: int
    outcomes: np.ndarray
    _index: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        self.outcomes.setflags(write=False)
        if len(self.outcomes) != count_compositions(self.d, self.n):
            raise ValueError("outcome table does not match the simplex cardinality")

    def __len__(self) -> int:
        return len(self.outcomes)

    def __iter__(self) -> Iterator[OutcomeVector]:
        for row in self.outcomes:
            yield OutcomeVector(tuple(int(c) for c in row))

    def index(self, x: OutcomeLike) -> int:
        """Position of x in the lexicographic order."""
        if not self._index:
            self._index.update({tuple(int(c) for c in row): i for i, row in enumerate(self.outcomes)})
        key = tuple(int(c) for c in x)
        try:
            return self._index[key]
        except KeyError:
            raise ValueError(f"{key} is not in E_d for d={self.d}, n={self.n}") from None

    def contains(self, x: OutcomeLike) -> bool:
        return len(x) == self.d and all(c >= 0 for c in x) and sum(x) == self.n


@lru_cache(maxsize=64)
def _cached_simplex(d: int, n: int) -> DiscreteSimplex:
    return DiscreteSimplex(d, n, compositions(d, n))


def enumerate_simplex(d: int, n: int, max_points: int | None = None) -> DiscreteSimplex:
    """Enumerate E_d, the outcomes of n multinomial trials over d categories."""
    if d < 2:
        raise ValueError("d must be >= 2")
    if n < 0:
        raise ValueError("n must be >= 0")
    size = count_compositions(d, n)
    max_points = CAPS.max_points if max_points is None else max_points
    if size > max_points:
        raise ResourceLimitError(f"|E_d| = {size} exceeds the cap of {max_points}")
    return _cached_simplex(d, n)


def simplex_grid(d: int, mesh: int, max_points: int | None = None) -> np.ndarray:
    """Regular barycentric grid on the simplex: all (k_1/m, ..., k_d/m) with sum k_i = m.

    Returns a float array of shape (binomial(m+d-1, d-1), d), lexicographic in k.
    """
    if mesh < 1:
        raise ValueError("mesh must be >= 1")
    if d < 2:
        raise ValueError("d must be >= 2")
    return compositions(d, mesh, max_points) / float(mesh)


def _log_theta(thetas: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(thetas)


def _log_pmf_chunk(log_theta: np.ndarray, outcomes: np.ndarray, lf: np.ndarray, n: int) -> np.ndarray:
    # terms[g, j, i] = x_ji * log(theta_gi) - log(x_ji!), with 0 * log 0 = 0
    with np.errstate(invalid="ignore"):
        terms = outcomes[None, :, :] * log_theta[:, None, :]
    terms = np.where(outcomes[None, :, :] == 0, 0.0, terms) - lf[outcomes][None, :, :]
    terms.sort(axis=-1)
    return terms.sum(axis=-1) + lf[n]


def iter_chunks(total: int, per_item: int) -> Iterator[slice]:
    step = max(1, _CHUNK_ELEMENTS // max(1, per_item))
    for start in range(0, total, step):
        yield slice(start, min(total, start + step))


def log_pmf_matrix(thetas: np.ndarray, outcomes: np.ndarray, n: int | None = None) -> np.ndarray:
    """Log multinomial pmf for every (theta, outcome) pair.

    Parameters
    ----------
    thetas : array (G, d)
        Parameter points, each on the simplex.
    outcomes : array (N, d)
        Count vectors, each summing to ``n``.

    Returns
    -------
    array (G, N)
        ``log mu_theta(x)``, ``-inf`` where some ``theta_i == 0`` has ``x_i > 0``.
    """
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    outcomes = np.atleast_2d(np.asarray(outcomes, dtype=np.int64))
    if thetas.shape[1] != outcomes.shape[1]:
        raise ValueError(f"dimension mismatch: theta has d={thetas.shape[1]}, x has d={outcomes.shape[1]}")
    if n is None:
        n = int(outcomes[0].sum())
    lf = log_factorials(n).values
    log_theta = _log_theta(thetas)
    out = np.empty((len(thetas), len(outcomes)))
    for sl in iter_chunks(len(thetas), outcomes.size):
        out[sl] = _log_pmf_chunk(log_theta[sl], outcomes, lf, n)
    return out


def log_pmf(p: ProbabilityLike, x: OutcomeLike, table: LogFactorialTable | None = None) -> float:
    """Log-probability of outcome x under M_d(n, p); ``-inf`` if impossible."""
    p = as_probability(p)
    x = as_outcome(x)
    if p.d != x.d:
        raise ValueError(f"dimension mismatch: p has d={p.d}, x has d={x.d}")
    n = x.n
    table = table if table is not None else log_factorials(n)
    if not table.covers(n):
        raise ValueError(f"log-factorial table covers n <= {table.n}, got n={n}")
    counts = np.asarray(x.counts, dtype=np.int64)[None, :]
    log_theta = _log_theta(np.asarray(p.entries)[None, :])
    return float(_log_pmf_chunk(log_theta, counts, table.values, n)[0, 0])
