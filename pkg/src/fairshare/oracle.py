"""Brute-force verifiers.

Nothing here calls into the solvers: the Contested Garment formula is
restated, the two-player frontier is rebuilt from all pure assignments and
Pareto checks search explicit allocation grids.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from fairshare.errors import SizeLimitError

GRID_MAX_PLAYERS = 3
GRID_MAX_COMMODITIES = 8
FRONTIER_MAX_COMMODITIES = 12


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    measured: float
    tolerance: float


@dataclass
class VerificationReport:
    checks: list = field(default_factory=list)

    @property
    def overall(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name, passed, measured, tolerance):
        self.checks.append(Check(name, bool(passed), float(measured), float(tolerance)))
        return self

    def extend(self, other: "VerificationReport"):
        self.checks.extend(other.checks)
        return self

    def lines(self):
        for c in self.checks:
            status = "PASS" if c.passed else "FAIL"
            yield f"{status}  {c.name:<48} measured={c.measured:.6g} tol={c.tolerance:.3g}"

    def to_dict(self):
        return {
            "overall": self.overall,
            "checks": [
                {"name": c.name, "passed": c.passed, "measured": c.measured, "tolerance": c.tolerance}
                for c in self.checks
            ],
        }


def _pareto_max(points: np.ndarray) -> np.ndarray:
    """Rows of ``points`` not weakly dominated by another row (duplicates dropped)."""
    pts = np.unique(points, axis=0)
    if len(pts) <= 1:
        return pts
    ge = np.all(pts[None, :, :] >= pts[:, None, :], axis=2)
    gt = np.any(pts[None, :, :] > pts[:, None, :], axis=2)
    dominated = np.any(ge & gt, axis=1)
    return pts[~dominated]


def _pure_points(u: np.ndarray, commodities) -> np.ndarray:
    """Pareto-maximal utility vectors over whole-commodity assignments."""
    n = u.shape[0]
    pts = np.zeros((1, n))
    for k in commodities:
        options = np.diag(u[:, k])
        pts = (pts[:, None, :] + options[None, :, :]).reshape(-1, n)
        pts = _pareto_max(pts)
    return pts


def _compositions(total: int, parts: int) -> np.ndarray:
    rows = []
    for cut in itertools.combinations(range(total + parts - 1), parts - 1):
        bounds = (-1,) + cut + (total + parts - 1,)
        rows.append([bounds[i + 1] - bounds[i] - 1 for i in range(parts)])
    return np.array(rows, dtype=float)


def _units_needed(deficit: np.ndarray, values: np.ndarray, resolution: int) -> np.ndarray:
    """Grid units of a commodity each player needs to beat ``deficit`` strictly."""
    with np.errstate(divide="ignore", invalid="ignore"):
        units = np.floor(resolution * deficit / values) + 1.0
    units = np.where(values > 0, units, np.inf)
    return np.where(deficit < 0, 0.0, units)


def grid_pareto_check(problem, utilities, epsilon: float, resolution: int = 100) -> VerificationReport:
    """Search allocation grids for a point beating ``utilities + epsilon`` everywhere.

    Allocations follow the basic pattern: at most N-1 commodities are split,
    each split on a ``1/resolution`` grid, the rest go whole to one player.
    Passes when no dominating grid point exists.
    """
    u = np.asarray(problem.utilities, dtype=float)
    n, k = u.shape
    if n > GRID_MAX_PLAYERS or k > GRID_MAX_COMMODITIES:
        raise SizeLimitError(
            f"grid check limited to N <= {GRID_MAX_PLAYERS}, K <= {GRID_MAX_COMMODITIES}"
        )
    target = np.asarray(utilities, dtype=float) + epsilon
    witnesses = 0
    splits = _compositions(resolution, n)
    for size in range(0, min(n - 1, k) + 1):
        for shared in itertools.combinations(range(k), size):
            rest = [j for j in range(k) if j not in shared]
            pure = _pure_points(u, rest)
            deficit = target - pure
            if size:
                # drop rows the shared commodities cannot rescue even fractionally
                top = u[:, list(shared)].max(axis=1)
                with np.errstate(divide="ignore", invalid="ignore"):
                    need = np.where(deficit > 0, deficit / top, 0.0)
                deficit = deficit[need.sum(axis=1) < size]
                if not len(deficit):
                    continue
            if size == 0:
                found = np.all(deficit < 0, axis=1)
            elif size == 1:
                units = _units_needed(deficit, u[:, shared[0]], resolution)
                found = units.sum(axis=1) <= resolution
            else:
                first, second = shared[0], shared[1]
                gained = splits / resolution * u[:, first]
                remaining = deficit[:, None, :] - gained[None, :, :]
                units = _units_needed(remaining, u[:, second], resolution)
                found = np.any(units.sum(axis=2) <= resolution, axis=1)
            witnesses += int(np.count_nonzero(found))
    return VerificationReport().add(
        "grid epsilon-Pareto (no dominating allocation)", witnesses == 0, witnesses, epsilon
    )


def _cg(c1, c2, estate):
    over1 = max(estate - c1, 0.0)
    over2 = max(estate - c2, 0.0)
    rest = (estate - over1 - over2) / 2.0
    return rest + over2, rest + over1


def cg_consistency_check(claims, d, utilities, tol: float = 1e-6) -> VerificationReport:
    """Every pair of players splits its joint surplus by the Contested Garment rule."""
    claims = np.asarray(claims, dtype=float)
    x = np.asarray(utilities, dtype=float) - np.asarray(d, dtype=float)
    worst = 0.0
    for i, j in itertools.combinations(range(claims.size), 2):
        xi, xj = _cg(claims[i], claims[j], x[i] + x[j])
        worst = max(worst, abs(xi - x[i]), abs(xj - x[j]))
    report = VerificationReport()
    return report.add("pairwise Contested Garment consistency", worst <= tol, worst, tol)


def _upper_hull(points: np.ndarray) -> np.ndarray:
    pts = sorted(map(tuple, points), key=lambda p: (p[0], -p[1]))
    hull = []
    for p in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (x2 - x1) * (p[1] - y1) - (y2 - y1) * (p[0] - x1) >= 0:
                hull.pop()
            else:
                break
        hull.append(p)
    return np.array(hull)


def two_player_frontier_vertices(u) -> np.ndarray:
    """Vertices of the two-player Pareto frontier, from all ``2**K`` pure splits."""
    u = np.asarray(u, dtype=float)
    k = u.shape[1]
    if u.shape[0] != 2:
        raise ValueError("two-player frontier needs a 2 x K matrix")
    if k > FRONTIER_MAX_COMMODITIES:
        raise SizeLimitError(f"frontier enumeration limited to K <= {FRONTIER_MAX_COMMODITIES}")
    masks = np.array(list(itertools.product((0.0, 1.0), repeat=k)))
    pts = np.stack([masks @ u[0], (1.0 - masks) @ u[1]], axis=1)
    hull = _upper_hull(pts)
    # a vertical drop at the right end is dominated; keep the top point per x
    keep = [hull[0]]
    for p in hull[1:]:
        if p[0] > keep[-1][0]:
            keep.append(p)
    return np.array(keep)


def bruteforce_two_player_frontier(u, resolution: int = 100, targets=None) -> list:
    """Samples ``(u1, max u2)`` along the two-player frontier.

    ``targets`` overrides the default grid of ``resolution + 1`` evenly spaced
    values of player 1's utility.
    """
    verts = two_player_frontier_vertices(u)
    if targets is None:
        targets = np.linspace(0.0, verts[-1, 0], resolution + 1)
    values = np.interp(np.asarray(targets, dtype=float), verts[:, 0], verts[:, 1])
    return [(float(a), float(b)) for a, b in zip(np.atleast_1d(targets), np.atleast_1d(values))]


def kkt_check(problem, allocation, share_tol: float = 1e-7, tol: float = 1e-6) -> VerificationReport:
    """Check that an allocation is supported by positive player weights.

    Optimality of an allocation for the ideal point LP (or Pareto optimality
    in general) means there are weights ``w`` with ``w_q u_qk`` maximal among
    players for every commodity q holds.  In log space those are difference
    constraints ``log w_r - log w_q <= log(u_qk / u_rk)``; they are
    consistent iff the constraint graph has no negative cycle.  Commodities
    shared by two players force their weight ratio to ``u_pk / u_p'k``.
    """
    u = np.asarray(problem.utilities, dtype=float)
    alpha = np.asarray(allocation, dtype=float)
    n, k = u.shape
    held = alpha > share_tol
    active = [q for q in range(n) if np.any(held[q] & (u[q] > 0))]
    dist = np.full((n, n), np.inf)
    np.fill_diagonal(dist, 0.0)
    zero_value_conflict = 0
    for j in range(k):
        for q in np.flatnonzero(held[:, j]):
            if u[q, j] <= 0:
                if any(u[r, j] > 0 for r in active if r != q):
                    zero_value_conflict += 1
                continue
            for r in active:
                if r != q and u[r, j] > 0:
                    # x_r <= x_q + log(u_qj / u_rj)
                    dist[q, r] = min(dist[q, r], math.log(u[q, j] / u[r, j]))
    for via in range(n):
        dist = np.minimum(dist, dist[:, via : via + 1] + dist[via : via + 1, :])
    worst_cycle = float(min(0.0, np.min(np.diag(dist))))
    report = VerificationReport()
    report.add("KKT threshold weights consistent", worst_cycle >= -tol, -worst_cycle, tol)
    report.add("no commodity held at zero value", zero_value_conflict == 0, zero_value_conflict, 0)
    return report


def allocation_check(problem, allocation, utilities, tol: float = 1e-9) -> VerificationReport:
    """Bounds, column sums and utility consistency of an allocation."""
    u = np.asarray(problem.utilities, dtype=float)
    alpha = np.asarray(allocation, dtype=float)
    report = VerificationReport()
    if alpha.shape != u.shape:
        return report.add("allocation shape", False, float("nan"), 0)
    bound = max(float(np.max(-alpha, initial=0.0)), float(np.max(alpha - 1.0, initial=0.0))) + 0.0
    report.add("allocation entries in [0, 1]", bound <= tol, bound, tol)
    over = float(np.max(alpha.sum(axis=0) - 1.0, initial=0.0))
    report.add("column sums at most one", over <= tol, over, tol)
    realised = np.einsum("nk,nk->n", alpha, u)
    gap = float(np.max(np.abs(realised - np.asarray(utilities, dtype=float)), initial=0.0))
    scaled = tol * max(1.0, float(np.max(np.abs(realised), initial=0.0)))
    report.add("utilities match allocation", gap <= scaled, gap, scaled)
    return report


def grid_set_pareto_check(bset, point, epsilon: float, resolution: int = 400) -> VerificationReport:
    """Grid search of a bargaining set's bounding box for a point beating
    ``point + epsilon`` in every coordinate."""
    point = np.asarray(point, dtype=float)
    n = point.size
    if n > GRID_MAX_PLAYERS:
        raise SizeLimitError(f"set grid check limited to N <= {GRID_MAX_PLAYERS}")
    lo = point + epsilon
    hi = np.asarray(bset.upper_corner, dtype=float)
    if np.any(lo >= hi):
        return VerificationReport().add("grid epsilon-Pareto (set)", True, 0.0, epsilon)
    axes = [np.linspace(a, b, resolution + 1)[1:] for a, b in zip(lo, hi)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    inside = np.all(grid @ bset.normals.T <= bset.offsets, axis=1)
    return VerificationReport().add(
        "grid epsilon-Pareto (set)", not inside.any(), float(inside.sum()), epsilon
    )
