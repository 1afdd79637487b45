"""Command-line front end.

Subcommands: interval, region, sweep, chi2-example, antibiotic-example,
dirichlet-check. Exit status: 0 success, 1 usage error, 2 resource cap,
3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import core, levelset
from .comparators import (
    BoundaryWarning,
    ConvergenceError,
    chi2_survival,
    clopper_pearson_interval,
    dirichlet_multinomial_identity_check,
    score_accept_matrix,
    wald_interval,
    wilson_interval,
)
from .core import ResourceLimitError, enumerate_simplex
from .covering import interval_from_predicate
from .evaluation import compare

EXIT_OK, EXIT_USAGE, EXIT_RESOURCE, EXIT_CONVERGENCE = 0, 1, 2, 3

INTERVAL_METHODS = ("clopper-pearson", "wilson", "wald", "level-set", "level-set-refined", "score")


class UsageError(ValueError):
    pass


def _fmt(v: float) -> str:
    return f"{v:.12g}"


def _num(v: float) -> float:
    return float(_fmt(v))


def parse_counts(text: str, d: int | None = None, n: int | None = None) -> tuple[int, ...]:
    try:
        counts = tuple(int(c) for c in text.split(","))
    except ValueError:
        raise UsageError(f"malformed counts {text!r}; expected comma-separated integers") from None
    if len(counts) < 2 or any(c < 0 for c in counts):
        raise UsageError(f"counts must be >= 2 non-negative integers, got {text!r}")
    if d is not None and len(counts) != d:
        raise UsageError(f"got {len(counts)} counts for d={d}")
    if n is not None and sum(counts) != n:
        raise UsageError(f"counts sum to {sum(counts)}, not n={n}")
    return counts


# --- worked examples -----------------------------------------------------------


@dataclass(frozen=True)
class OddsRatioInterval:
    lower: float
    upper: float

    def __post_init__(self) -> None:
        if not 0 < self.lower <= self.upper:
            raise ValueError("odds-ratio bounds must be positive and ordered")


@dataclass(frozen=True)
class Chi2Report:
    counts: tuple[int, ...]
    alpha: float
    mesh: int
    statistic: float
    p_value: float
    mle_in_region: bool
    region_points: int
    h0_grid_hits: int
    h0_near_points: int
    intersects_h0: bool
    odds_ratio: OddsRatioInterval | None

    @property
    def chi2_rejects(self) -> bool:
        return self.p_value < self.alpha

    @property
    def region_rejects(self) -> bool:
        return not self.intersects_h0


def pearson_2x2(counts: Sequence[int]) -> tuple[float, float]:
    """Pearson chi-square statistic and df = 1 p-value for the table [[c1, c2], [c3, c4]]."""
    table = np.asarray(counts, dtype=float).reshape(2, 2)
    rows, cols = table.sum(axis=1), table.sum(axis=0)
    if (rows == 0).any() or (cols == 0).any():
        raise UsageError("the 2x2 table has an empty row or column")
    expected = np.outer(rows, cols) / table.sum()
    stat = math.fsum(((table - expected) ** 2 / expected).ravel())
    return stat, chi2_survival(stat, 1)


def h0_surface(mesh: int) -> np.ndarray:
    """Independence tables (uv, (1-u)v, u(1-v), (1-u)(1-v)) on a (u, v) mesh."""
    u, v = np.meshgrid(np.arange(mesh + 1) / mesh, np.arange(mesh + 1) / mesh, indexing="ij")
    u, v = u.ravel(), v.ravel()
    return np.column_stack([u * v, (1 - u) * v, u * (1 - v), (1 - u) * (1 - v)])


def chi2_example(counts: Sequence[int] = (3, 8, 10, 5), alpha: float = 0.05, mesh: int = 52) -> Chi2Report:
    """Chi-square test against level-set region inversion for a 2x2 table.

    The region meets H0 when some region grid point lies within half a grid
    cell (max-norm) of the sampled H0 surface. Sampled H0 points that are
    themselves in the region are counted separately. The odds-ratio interval
    is the range of p1 p4 / (p2 p3) over interior region grid points.
    """
    counts = tuple(int(c) for c in counts)
    if len(counts) != 4:
        raise UsageError("the chi-square example needs 4 counts (a 2x2 table)")
    stat, p_value = pearson_2x2(counts)
    n = sum(counts)
    region = levelset.region_grid(counts, alpha, mesh)
    pts = region.member_points

    surface = h0_surface(mesh)
    simplex = enumerate_simplex(4, n)
    j = simplex.index(counts)
    hits = levelset.accept_matrix(surface, simplex, alpha)[:, j]

    half_cell = 0.5 / mesh + 1e-12
    near = np.zeros(len(pts), dtype=bool)
    for sl in core.iter_chunks(len(pts), 4 * len(surface)):
        dist = np.abs(pts[sl, None, :] - surface[None, :, :]).max(axis=2)
        near[sl] = (dist <= half_cell).any(axis=1)

    interior = pts[(pts >= 1.0 / mesh - 1e-12).all(axis=1)]
    odds = None
    if len(interior):
        ratio = interior[:, 0] * interior[:, 3] / (interior[:, 1] * interior[:, 2])
        odds = OddsRatioInterval(float(ratio.min()), float(ratio.max()))
    mle = tuple(c / n for c in counts)
    return Chi2Report(
        counts, alpha, mesh, stat, p_value,
        levelset.region_contains(mle, counts, alpha),
        int(len(pts)), int(hits.sum()), int(near.sum()), bool(near.any() or hits.any()), odds,
    )


@dataclass(frozen=True)
class AntibioticReport:
    counts: tuple[int, ...]
    alpha: float
    mesh: int
    volume: float
    bounds: list[tuple[float, float]]
    contains_first_vertex: bool
    score_bounds: list[tuple[float, float]]
    score_volume: float


def antibiotic_example(counts: Sequence[int] = (8, 2, 0), alpha: float = 0.05, mesh: int = 100) -> AntibioticReport:
    """Level-set and score regions for a trinomial susceptibility count, on a mesh grid."""
    counts = tuple(int(c) for c in counts)
    region = levelset.region_grid(counts, alpha, mesh)
    d = len(counts)
    vertex = np.zeros(d)
    vertex[0] = 1.0
    contains_vertex = levelset.region_contains(tuple(vertex), counts, alpha)
    score_members = score_accept_matrix(region.points, np.asarray([counts]), alpha)[:, 0]
    spts = region.points[score_members]
    score_bounds = [(float(lo), float(hi)) for lo, hi in zip(spts.min(axis=0), spts.max(axis=0))] if len(spts) else []
    score_volume = levelset.region_volume(score_members, region.points)
    return AntibioticReport(counts, alpha, mesh, region.volume, region.bounds(), contains_vertex, score_bounds, score_volume)


# --- command handlers -------------------------------------------------------------


def _emit(payload: dict, fmt: str, out=None) -> None:
    out = out or sys.stdout
    if fmt == "json":
        out.write(json.dumps(payload, indent=2) + "\n")
    else:
        for key, value in payload.items():
            out.write(f"{key}: {value}\n")


def _interval_for(method: str, x1: int, n: int, alpha: float, mesh: int) -> tuple[float, float, bool]:
    if method == "clopper-pearson":
        iv = clopper_pearson_interval(x1, n, alpha)
        return iv.lower, iv.upper, False
    if method == "wilson":
        iv = wilson_interval(x1, n, alpha)
        return iv.lower, iv.upper, False
    if method == "wald":
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            iv = wald_interval(x1, n, alpha)
        for w in caught:
            if issubclass(w.category, BoundaryWarning):
                print(f"warning: {w.message}", file=sys.stderr)
        return iv.lower, iv.upper, iv.boundary
    x = (x1, n - x1)
    if method == "level-set":
        contains = lambda t: levelset.region_contains((t, 1.0 - t), x, alpha)
    elif method == "level-set-refined":
        contains = lambda t: levelset.refined_region_contains((t, 1.0 - t), x, alpha)
    elif method == "score":
        # the d = 2 score region is the Wilson interval
        iv = wilson_interval(x1, n, alpha)
        return iv.lower, iv.upper, False
    else:
        raise UsageError(f"unknown interval method {method!r}")
    lo, hi = interval_from_predicate(contains, x1 / n, mesh=mesh)
    return lo, hi, False


def cmd_interval(args) -> int:
    if args.n < 1 or not 0 <= args.x <= args.n:
        raise UsageError(f"need 0 <= x <= n with n >= 1, got x={args.x}, n={args.n}")
    lo, hi, boundary = _interval_for(args.method, args.x, args.n, args.alpha, args.mesh)
    payload = {
        "method": args.method,
        "x": args.x,
        "n": args.n,
        "alpha": args.alpha,
        "lower": _num(lo),
        "upper": _num(hi),
        "width": _num(hi - lo),
        "boundary": boundary,
    }
    if args.format == "text":
        flag = " (degenerate: observation on the boundary)" if boundary else ""
        print(f"{args.method} {100 * (1 - args.alpha):g}% interval for p1 (x={args.x}, n={args.n}): "
              f"[{_fmt(lo)}, {_fmt(hi)}]  width {_fmt(hi - lo)}{flag}")
    else:
        _emit(payload, "json")
    return EXIT_OK


def _region_payload(region: levelset.RegionGrid) -> dict:
    d = region.points.shape[1]
    return {
        "counts": list(region.x),
        "alpha": region.alpha,
        "mesh": region.mesh,
        "grid_points": int(len(region.points)),
        "member_points": int(region.members.sum()),
        "measure": "width" if d == 2 else "projected-volume",
        "volume": _num(region.volume),
        "bounds": [[_num(lo), _num(hi)] for lo, hi in region.bounds()],
    }


def cmd_region(args) -> int:
    counts = parse_counts(args.counts, args.d, args.n)
    mesh = args.mesh if args.mesh else (200 if len(counts) == 2 else 100 if len(counts) == 3 else 52)
    region = levelset.region_grid(counts, args.alpha, mesh)
    summary = _region_payload(region)
    if args.output:
        path = Path(args.output)
        if args.format == "json":
            payload = dict(summary)
            payload["points"] = [[_num(v) for v in pt] for pt in region.points]
            payload["member"] = [int(m) for m in region.members]
            path.write_text(json.dumps(payload) + "\n")
        else:
            path.write_text(region.to_csv())
    _emit(summary, args.format)
    return EXIT_OK


def cmd_sweep(args) -> int:
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    if not methods:
        raise UsageError("--methods needs at least one method")
    result = compare(methods, args.d, args.n, args.alpha, args.step, args.mesh)
    if args.output:
        out = Path(args.output)
        out.mkdir(parents=True, exist_ok=True)
        stem = f"sweep_d{args.d}_n{args.n}"
        if args.format == "json":
            (out / f"{stem}.json").write_text(result.to_json())
        else:
            (out / f"{stem}.csv").write_text(result.to_csv())
            (out / f"{stem}_differences.csv").write_text(result.differences_csv())
    level = 1.0 - args.alpha
    summary = {}
    for m, low in result.min_coverage().items():
        status = "ok" if low >= level - 1e-10 else "below nominal"
        summary[m] = {"min_coverage": _num(low), "status": status}
    if args.format == "json" and not args.output:
        sys.stdout.write(result.to_json())
        return EXIT_OK
    if args.format == "json":
        _emit({"d": args.d, "n": args.n, "alpha": args.alpha, "summary": summary}, "json")
    else:
        print(f"sweep d={args.d} n={args.n} alpha={args.alpha} mesh={result.mesh} points={len(result.points)}")
        for m, info in summary.items():
            print(f"  {m}: min coverage {_fmt(info['min_coverage'])} ({info['status']})")
        if args.output is None:
            sys.stdout.write(result.differences_csv())
    return EXIT_OK


def cmd_chi2_example(args) -> int:
    counts = parse_counts(args.counts, d=4)
    report = chi2_example(counts, args.alpha, args.mesh)
    payload = {
        "counts": list(report.counts),
        "statistic": _num(report.statistic),
        "p_value": _num(report.p_value),
        "chi2_rejects_independence": report.chi2_rejects,
        "mle_in_region": report.mle_in_region,
        "region_points": report.region_points,
        "h0_grid_hits": report.h0_grid_hits,
        "h0_near_points": report.h0_near_points,
        "region_intersects_h0": report.intersects_h0,
        "region_rejects_independence": report.region_rejects,
        "odds_ratio_interval": [_num(report.odds_ratio.lower), _num(report.odds_ratio.upper)] if report.odds_ratio else None,
        "mesh": report.mesh,
    }
    _emit(payload, args.format)
    return EXIT_OK


def cmd_antibiotic_example(args) -> int:
    counts = parse_counts(args.counts, d=3)
    report = antibiotic_example(counts, args.alpha, args.mesh)
    payload = {
        "counts": list(report.counts),
        "mesh": report.mesh,
        "volume": _num(report.volume),
        "bounds": [[_num(a), _num(b)] for a, b in report.bounds],
        "max_third_coordinate": _num(report.bounds[2][1]) if report.bounds else None,
        "contains_first_vertex": report.contains_first_vertex,
        "score_volume": _num(report.score_volume),
        "score_bounds": [[_num(a), _num(b)] for a, b in report.score_bounds],
    }
    _emit(payload, args.format)
    return EXIT_OK


def cmd_dirichlet_check(args) -> int:
    p = tuple(float(v) for v in args.p.split(","))
    ks = tuple(int(v) for v in args.k.split(",")) if args.k else ()
    if len(p) != args.d:
        raise UsageError(f"--p needs {args.d} entries")
    rng = np.random.default_rng(args.seed)
    check = dirichlet_multinomial_identity_check(args.d, args.n, ks, core.ProbabilityVector(p), args.samples, rng)
    payload = {
        "exact": _num(check.exact),
        "estimate": _num(check.estimate),
        "standard_error": _num(check.standard_error),
        "z": _num(check.z_score),
        "seed": args.seed,
        "samples": args.samples,
    }
    _emit(payload, args.format)
    return EXIT_OK


# --- parser -------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _alpha(text: str) -> float:
    value = float(text)
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError("alpha must lie in (0, 1)")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="multiconf", description="Exact small-sample confidence regions for multinomial proportions.")
    parser.add_argument("--max-outcomes", type=int, default=core.DEFAULT_MAX_POINTS, help="cap on |E_d| and grid sizes")
    parser.add_argument("--max-work", type=int, default=core.DEFAULT_MAX_WORK, help="cap on grid points x outcomes")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, fmt=("text", "json")):
        p.add_argument("--alpha", type=_alpha, default=0.05)
        p.add_argument("--format", choices=fmt, default=fmt[0])

    p = sub.add_parser("interval", help="binomial interval for x successes out of n")
    p.add_argument("--method", choices=INTERVAL_METHODS, default="level-set")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--x", type=int, required=True)
    p.add_argument("--mesh", type=int, default=200, help="scan mesh before bisection (level-set methods)")
    common(p)
    p.set_defaults(func=cmd_interval)

    p = sub.add_parser("region", help="level-set region on a simplex grid")
    p.add_argument("--counts", required=True, help="observed counts, e.g. 8,2,0")
    p.add_argument("--d", type=int, default=None, help="expected number of categories (checked)")
    p.add_argument("--n", type=int, default=None, help="expected total count (checked)")
    p.add_argument("--mesh", type=int, default=None)
    p.add_argument("--output", help="write grid membership to this file")
    common(p, ("csv", "json"))
    p.set_defaults(func=cmd_region)

    p = sub.add_parser("sweep", help="exact coverage and mean volume over a parameter grid")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--methods", required=True, help="comma-separated, e.g. level-set,score")
    p.add_argument("--step", type=float, default=None)
    p.add_argument("--mesh", type=int, default=None)
    p.add_argument("--output", help="directory for the CSV/JSON tables")
    common(p, ("csv", "json"))
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("chi2-example", help="chi-square test vs level-set inversion for a 2x2 table")
    p.add_argument("--counts", default="3,8,10,5")
    p.add_argument("--mesh", type=int, default=52)
    common(p)
    p.set_defaults(func=cmd_chi2_example)

    p = sub.add_parser("antibiotic-example", help="trinomial susceptibility example")
    p.add_argument("--counts", default="8,2,0")
    p.add_argument("--mesh", type=int, default=100)
    common(p)
    p.set_defaults(func=cmd_antibiotic_example)

    p = sub.add_parser("dirichlet-check", help="Monte-Carlo check of the Dirichlet-multinomial identity")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", default="", help="thresholds k_1..k_(d-1), comma-separated")
    p.add_argument("--p", required=True, help="probabilities, comma-separated")
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    common(p)
    p.set_defaults(func=cmd_dirichlet_check)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with core.resource_caps(args.max_outcomes, args.max_work):
            return args.func(args)
    except ResourceLimitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
