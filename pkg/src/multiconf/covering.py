"""Covering collections of the discrete simplex and the confidence regions they induce.

A covering collection is a strictly increasing family of outcome sets
``A_0 = {} ⊂ A_1 ⊂ ... ⊂ A_kappa = E_d``. It is stored as a rank function:
``ranks[j]`` is the least index k with ``outcomes[j] ∈ A_k``, so
``A_k = {x : rank(x) <= k}``. Strict growth means every index 1..kappa is
the rank of at least one outcome.

The region of an observation x at level alpha is
``{theta : mu_theta(A_{k_x}) >= alpha}`` with ``k_x = rank(x)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .core import (
    DiscreteSimplex,
    OutcomeLike,
    ProbabilityLike,
    as_outcome,
    as_probability,
    enumerate_simplex,
    iter_chunks,
    log_pmf_matrix,
)

__all__ = [
    "COLLECTION_KINDS",
    "CoveringCollection",
    "RegionPredicate",
    "fully_granular",
    "bottom_to_top",
    "top_to_bottom",
    "spiral_order",
    "default_granular",
    "index_of",
    "set_at",
    "reflected",
    "collection_masses",
    "region_membership",
    "region_accept_matrix",
    "symmetrized_accept_matrix",
    "symmetrized_region",
    "reverse_region_mass",
    "is_permutation_invariant",
    "is_equivariant",
    "interval_from_predicate",
]

COLLECTION_KINDS = ("fully-granular", "bottom-to-top", "top-to-bottom", "spiral-d3", "custom")


@dataclass(frozen=True)
class CoveringCollection:
    simplex: DiscreteSimplex
    ranks: np.ndarray
    kind: str = "custom"
    checkpoints: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        ranks = np.asarray(self.ranks, dtype=np.int64).copy()
        ranks.setflags(write=False)
        object.__setattr__(self, "ranks", ranks)
        if self.kind not in COLLECTION_KINDS:
            raise ValueError(f"unknown collection kind {self.kind!r}")
        if ranks.shape != (len(self.simplex),):
            raise ValueError("need one rank per outcome")
        kappa = int(ranks.max())
        if ranks.min() < 1:
            raise ValueError("ranks start at 1; index 0 is the empty set")
        if len(np.unique(ranks)) != kappa:
            raise ValueError("every index 1..kappa must add at least one outcome (strict growth)")
        if self.kind in ("bottom-to-top", "top-to-bottom") and self.simplex.d != 2:
            raise ValueError(f"{self.kind} collections exist only for d = 2")
        if self.kind == "spiral-d3" and self.simplex.d != 3:
            raise ValueError("spiral-d3 collections exist only for d = 3")
        if any(not 0 <= k <= kappa for k in self.checkpoints):
            raise ValueError("checkpoints must be valid indices")

    @property
    def d(self) -> int:
        return self.simplex.d

    @property
    def n(self) -> int:
        return self.simplex.n

    @property
    def kappa(self) -> int:
        """Largest index; A_kappa = E_d."""
        return int(self.ranks.max())

    @property
    def granular(self) -> bool:
        return self.kappa == len(self.simplex)

    def order(self) -> np.ndarray:
        """Outcomes sorted by rank (ties in lexicographic order)."""
        return self.simplex.outcomes[np.argsort(self.ranks, kind="stable")]

    def to_text(self) -> str:
        lines = [f"# covering-collection d={self.d} n={self.n} kind={self.kind}"]
        if self.checkpoints:
            lines.append("# checkpoints=" + ",".join(map(str, self.checkpoints)))
        for row, r in zip(self.simplex.outcomes, self.ranks):
            lines.append(",".join(str(int(c)) for c in row) + f" {int(r)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "CoveringCollection":
        kind = "custom"
        checkpoints: tuple[int, ...] = ()
        entries = []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for token in line[1:].split():
                    if token.startswith("kind="):
                        kind = token[5:]
                    elif token.startswith("checkpoints="):
                        checkpoints = tuple(int(v) for v in token[12:].split(","))
                continue
            counts, rank = line.split()
            entries.append((tuple(int(c) for c in counts.split(",")), int(rank)))
        if not entries:
            raise ValueError("no outcomes in collection text")
        d = len(entries[0][0])
        n = sum(entries[0][0])
        simplex = enumerate_simplex(d, n)
        ranks = np.zeros(len(simplex), dtype=np.int64)
        for counts, rank in entries:
            ranks[simplex.index(counts)] = rank
        if len(entries) != len(simplex) or ranks.min() < 1:
            raise ValueError("collection text must list every outcome exactly once")
        return cls(simplex, ranks, kind, checkpoints)


def fully_granular(simplex: DiscreteSimplex, order: Iterable[OutcomeLike], kind: str = "fully-granular",
                   checkpoints: tuple[int, ...] = ()) -> CoveringCollection:
    """Collection adding the outcomes one at a time in the given order."""
    ranks = np.zeros(len(simplex), dtype=np.int64)
    count = 0
    for k, x in enumerate(order, start=1):
        j = simplex.index(x)
        if ranks[j]:
            raise ValueError(f"outcome {tuple(x)} appears twice in the order")
        ranks[j] = k
        count += 1
    if count != len(simplex):
        raise ValueError("the order must list every outcome of E_d")
    return CoveringCollection(simplex, ranks, kind, checkpoints)


def bottom_to_top(n: int) -> CoveringCollection:
    """d = 2 collection with A_{k+1} = {x : x_1 <= k}."""
    simplex = enumerate_simplex(2, n)
    return CoveringCollection(simplex, simplex.outcomes[:, 0] + 1, "bottom-to-top")


def top_to_bottom(n: int) -> CoveringCollection:
    """d = 2 collection with A_{k+1} = {x : x_1 >= n - k}."""
    simplex = enumerate_simplex(2, n)
    return CoveringCollection(simplex, n - simplex.outcomes[:, 0] + 1, "top-to-bottom")


def _ring(n: int, r: int) -> list[tuple[int, int, int]]:
    m = n - 3 * r
    if m == 0:
        return [(r, r, r)]
    top = n - 2 * r
    ring = [(top - j, r + j, r) for j in range(m)]
    ring += [(r, top - j, r + j) for j in range(m)]
    ring += [(r + j, r, top - j) for j in range(m)]
    return ring


def spiral_order(n: int) -> CoveringCollection:
    """Fully granular d = 3 collection walking the simplex boundary inward, ring by ring.

    Ring r holds the outcomes whose smallest count equals r. Each ring starts
    at its vertex with the largest first count and moves toward increasing
    second count. ``checkpoints`` lists the index reached after each ring;
    those sets are permutation invariant.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    simplex = enumerate_simplex(3, n)
    order: list[tuple[int, int, int]] = []
    checkpoints = []
    r = 0
    while 3 * r <= n:
        order.extend(_ring(n, r))
        checkpoints.append(len(order))
        r += 1
    return fully_granular(simplex, order, "spiral-d3", tuple(checkpoints))


def default_granular(d: int, n: int) -> CoveringCollection:
    """Spiral order for d = 3, lexicographic order otherwise."""
    if d == 3:
        return spiral_order(n)
    simplex = enumerate_simplex(d, n)
    return CoveringCollection(simplex, np.arange(1, len(simplex) + 1), "fully-granular")


def index_of(x: OutcomeLike, c: CoveringCollection) -> int:
    """k_x, the least index whose set contains x."""
    x = as_outcome(x)
    if x.d != c.d or x.n != c.n:
        raise ValueError(f"{x.counts} is outside E_d for d={c.d}, n={c.n}")
    return int(c.ranks[c.simplex.index(x)])


def set_at(c: CoveringCollection, k: int) -> np.ndarray:
    """Outcomes of A_k."""
    if not 0 <= k <= c.kappa:
        raise ValueError(f"index {k} outside 0..{c.kappa}")
    return c.simplex.outcomes[c.ranks <= k]


def reflected(c: CoveringCollection) -> CoveringCollection:
    """The collection A'_k = E \\ A_{kappa - k}."""
    kind = {"bottom-to-top": "top-to-bottom", "top-to-bottom": "bottom-to-top"}.get(c.kind, "custom")
    return CoveringCollection(c.simplex, c.kappa + 1 - c.ranks, kind)


def collection_masses(thetas: np.ndarray, c: CoveringCollection) -> tuple[np.ndarray, np.ndarray]:
    """Masses of every A_k and of every complement, for each theta.

    Returns ``(inner, outer)`` of shape (G, kappa + 1) with
    ``inner[g, k] = mu_theta(A_k)`` and ``outer[g, k] = mu_theta(E \\ A_k)``.
    Both are accumulated directly so that small tails keep full precision.
    """
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    probs = np.exp(log_pmf_matrix(thetas, c.simplex.outcomes, c.n))
    kappa = c.kappa
    per_rank = np.zeros((len(thetas), kappa + 1))
    np.add.at(per_rank.T, c.ranks, probs.T)
    inner = np.cumsum(per_rank, axis=1)
    outer = np.zeros_like(inner)
    outer[:, :-1] = np.cumsum(per_rank[:, :0:-1], axis=1)[:, ::-1]
    return inner, outer


def region_accept_matrix(thetas: np.ndarray, c: CoveringCollection, alpha: float) -> np.ndarray:
    """(G, N) booleans: theta_g ∈ R_alpha(x_j) for the collection's region."""
    inner, _ = collection_masses(thetas, c)
    return inner[:, c.ranks] >= alpha


def symmetrized_accept_matrix(thetas: np.ndarray, c: CoveringCollection, alpha: float) -> np.ndarray:
    """(G, N) booleans for the two-sided region built from c and its reflection at alpha / 2."""
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    out = np.empty((len(thetas), len(c.simplex)), dtype=bool)
    half = 0.5 * alpha
    for sl in iter_chunks(len(thetas), 4 * len(c.simplex)):
        inner, outer = collection_masses(thetas[sl], c)
        # the reflected set reached by x is E \ A_{rank(x) - 1}
        out[sl] = (inner[:, c.ranks] >= half) & (outer[:, c.ranks - 1] >= half)
    return out


def region_membership(theta: ProbabilityLike, x: OutcomeLike, alpha: float, c: CoveringCollection) -> bool:
    """theta ∈ R_alpha(x) iff mu_theta(A_{k_x}) >= alpha."""
    theta = as_probability(theta)
    k = index_of(x, c)
    if theta.d != c.d:
        raise ValueError("dimension mismatch")
    inner, _ = collection_masses(np.asarray(theta.entries)[None, :], c)
    return bool(inner[0, k] >= alpha)


def reverse_region_mass(theta: ProbabilityLike, x: OutcomeLike, alpha: float, c: CoveringCollection) -> bool:
    """Diagnostic reverse region: mu_theta(A_{k_x}) <= 1 - alpha.

    Its coverage is bounded above by 1 - alpha, so it is not a confidence region.
    """
    theta = as_probability(theta)
    k = index_of(x, c)
    inner, _ = collection_masses(np.asarray(theta.entries)[None, :], c)
    return bool(inner[0, k] <= 1.0 - alpha)


@dataclass(frozen=True)
class RegionPredicate:
    """Membership test theta -> bool for one observation, method and level."""

    method: str
    alpha: float
    x: tuple[int, ...]
    accept: Callable[[np.ndarray], np.ndarray] = field(repr=False, compare=False)

    def __call__(self, theta: ProbabilityLike) -> bool:
        theta = as_probability(theta)
        return bool(self.accept(np.asarray(theta.entries)[None, :])[0])

    def members(self, thetas: np.ndarray) -> np.ndarray:
        return self.accept(np.atleast_2d(np.asarray(thetas, dtype=float)))


def symmetrized_region(x: OutcomeLike, alpha: float, c: CoveringCollection) -> RegionPredicate:
    """Two-sided region: level alpha / 2 under c intersected with level alpha / 2 under its reflection."""
    x = as_outcome(x, c.n)
    k = index_of(x, c)
    half = 0.5 * alpha

    def accept(thetas: np.ndarray) -> np.ndarray:
        inner, outer = collection_masses(thetas, c)
        return (inner[:, k] >= half) & (outer[:, k - 1] >= half)

    return RegionPredicate(f"symmetrized-{c.kind}", alpha, x.counts, accept)


def is_permutation_invariant(c: CoveringCollection, k: int) -> bool:
    """Whether A_k is mapped onto itself by every permutation of the coordinates."""
    members = {tuple(int(v) for v in row) for row in set_at(c, k)}
    return all(
        tuple(row[i] for i in perm) in members
        for row in members
        for perm in _permutations(c.d)
    )


def _permutations(d: int) -> Sequence[tuple[int, ...]]:
    if d <= 4:
        return list(itertools.permutations(range(d)))
    # a transposition and a d-cycle generate the symmetric group
    return [(1, 0, *range(2, d)), (*range(1, d), 0)]


def is_equivariant(c: CoveringCollection) -> bool:
    """True iff every A_k is invariant under coordinate permutations.

    Equivalent to the rank function being constant on permutation orbits.
    """
    outcomes = c.simplex.outcomes
    for perm in _permutations(c.d):
        if perm == tuple(range(c.d)):
            continue
        images = [c.simplex.index(row[list(perm)]) for row in outcomes]
        if not np.array_equal(c.ranks[images], c.ranks):
            return False
    return True


def interval_from_predicate(
    predicate: Callable[[float], bool],
    start: float,
    mesh: int = 200,
    tolerance: float = 1e-11,
) -> tuple[float, float]:
    """Endpoints of a d = 2 region in theta_1, assumed to be an interval containing ``start``.

    The region is scanned on a regular mesh outward from ``start``; each
    endpoint is then refined by bisection between the last member and the
    first non-member.
    """
    if not predicate(start):
        raise ValueError("start point is not in the region")

    def edge(direction: int) -> float:
        inside = start
        step = 1.0 / mesh
        outside = None
        k = 1
        while True:
            t = start + direction * k * step
            if t <= 0.0 or t >= 1.0:
                t = 0.0 if direction < 0 else 1.0
                if predicate(t):
                    return t
                outside = t
                break
            if predicate(t):
                inside = t
                k += 1
                continue
            outside = t
            break
        lo, hi = sorted((inside, outside))
        for _ in range(200):
            if hi - lo <= tolerance:
                break
            mid = 0.5 * (lo + hi)
            if predicate(mid) == (direction > 0):
                lo = mid
            else:
                hi = mid
        return lo if direction > 0 else hi

    return edge(-1), edge(+1)


