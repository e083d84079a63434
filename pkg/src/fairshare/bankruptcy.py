"""Contested Garment, Talmud rule and the Aumann bargaining solution.

The Aumann search is written against a membership predicate so the same
water-filling logic serves a polyhedral utility set (one commodity) and the
LP-defined utility set of the multi-commodity game.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from fairshare.bargaining import BargainingSet, ideal_point
from fairshare.errors import InputError, SolverError

SUM_TOL = 1e-10
BISECTION_STEPS = 100

CEA = "CEA"
CEL = "CEL"


def cg_rule(c1: float, c2: float, estate: float) -> tuple[float, float]:
    """Contested Garment division of ``estate`` between claims ``c1``, ``c2``.

    Each claimant first receives what the other concedes, ``(E - c_other)+``;
    the rest is split evenly.
    """
    if c1 < 0 or c2 < 0:
        raise InputError("claims must be non-negative")
    if estate < 0 or estate > c1 + c2 + SUM_TOL * max(1.0, c1 + c2):
        raise InputError(f"estate {estate} outside [0, {c1 + c2}]")
    over1 = max(estate - c1, 0.0)
    over2 = max(estate - c2, 0.0)
    shared = (estate - over1 - over2) / 2.0
    return shared + over2, shared + over1


@dataclass(frozen=True)
class ClaimsProblem:
    claims: np.ndarray
    estate: float

    def __post_init__(self):
        c = np.array(self.claims, dtype=float).ravel()
        if c.size == 0:
            raise InputError("claims problem needs at least one claimant")
        if not np.all(np.isfinite(c)) or np.any(c < 0):
            raise InputError("claims must be finite and non-negative")
        e = float(self.estate)
        total = float(c.sum())
        if not np.isfinite(e) or e < 0 or e > total + SUM_TOL * max(1.0, total):
            raise InputError(f"estate {e} outside [0, {total}]")
        c.setflags(write=False)
        object.__setattr__(self, "claims", c)
        object.__setattr__(self, "estate", min(e, total))

    @property
    def total_claims(self) -> float:
        return float(self.claims.sum())


@dataclass(frozen=True)
class Award:
    amounts: np.ndarray
    rule: str
    level: float


def _equal_awards(caps: np.ndarray, amount: float) -> tuple[np.ndarray, float]:
    """Water-fill ``amount`` into containers of size ``caps``.

    Returns ``(min(caps, level), level)``.  The level comes from bisection and
    is then recomputed exactly from the set of containers left unfilled.
    """
    if caps.size == 0 or amount <= 0:
        return np.zeros_like(caps), 0.0
    lo, hi = 0.0, float(caps.max())
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        total = float(np.minimum(caps, mid).sum())
        if abs(total - amount) <= SUM_TOL:
            lo = hi = mid
            break
        if total < amount:
            lo = mid
        else:
            hi = mid
    level = 0.5 * (lo + hi)
    open_ = caps > level
    if open_.any():
        exact = (amount - caps[~open_].sum()) / open_.sum()
        if caps[~open_].max(initial=0.0) <= exact <= caps[open_].min():
            level = float(exact)
    return np.minimum(caps, level), level


def talmud_rule(problem: ClaimsProblem) -> Award:
    """Aumann-Maschler division.

    Below half the total claims every claimant gets ``min(c/2, lam)``;
    above it every claimant loses ``min(c/2, mu)``.
    """
    c = problem.claims
    half = c / 2.0
    if problem.estate <= problem.total_claims / 2.0:
        x, lam = _equal_awards(half, problem.estate)
        return Award(x, CEA, lam)
    losses, mu = _equal_awards(half, problem.total_claims - problem.estate)
    return Award(c - losses, CEL, mu)


@dataclass(frozen=True)
class AumannOutcome:
    """Result of :func:`aumann_search`.

    ``pivot`` is the 1-based position, in ascending-claim order, of the first
    player in the group that shares the water level (0 when every player
    receives the full claim).  ``level`` is the offset ``y`` found on the
    frontier.  ``order`` maps sorted positions to player indices.
    """

    point: np.ndarray
    branch: str
    pivot: int
    level: float
    order: tuple


def claim_order(claims) -> np.ndarray:
    """Players sorted by ascending claim, ties by index."""
    return np.argsort(np.asarray(claims, dtype=float), kind="stable")


def aumann_search(
    claims,
    d,
    contains: Callable[[np.ndarray], bool],
    level_tol: float = 1e-12,
) -> AumannOutcome:
    """Water-filling search for the Aumann point of a comprehensive set.

    ``claims[n]`` is player n's surplus ``I_n - d_n``; ``contains`` answers
    membership of a utility vector given in the original player order.  The
    branch is CEL when every player can get half the claim, CEA otherwise.
    """
    claims = np.asarray(claims, dtype=float)
    d = np.asarray(d, dtype=float)
    order = claim_order(claims)
    c = claims[order]
    dd = d[order]
    n = c.size
    c_prev = np.concatenate([[0.0], c])  # c_prev[p] is c_p with c_0 = 0
    half = dd + c / 2.0

    def feasible(sorted_vec):
        x = np.empty(n)
        x[order] = sorted_vec
        return contains(x)

    def unsort(sorted_vec):
        x = np.empty(n)
        x[order] = sorted_vec
        return x

    idx = np.arange(1, n + 1)
    if feasible(half):
        branch = CEL

        def a(p):
            return np.where(idx <= p, half, dd + c - c_prev[p] / 2.0)

        # smallest p in 0..n with a(p) feasible; a(n) == half is feasible
        p = _smallest(0, n, lambda p: feasible(a(p)))
        if p == 0:
            return AumannOutcome(unsort(dd + c), branch, 0, 0.0, tuple(order))

        def b(y):
            return np.where(idx < p, half, dd + c - c_prev[p] / 2.0 + y)

        lo, hi = 0.0, (c_prev[p] - c_prev[p - 1]) / 2.0
    else:
        branch = CEA

        def a(p):
            return np.where(idx <= p, half, dd + c_prev[p] / 2.0)

        # a(0) == d is feasible, a(n) == half is not
        p = _smallest(1, n, lambda p: not feasible(a(p)))
        if p == 1:

            def b(y):
                return dd + y

            lo, hi = 0.0, c[0] / 2.0
        else:

            def b(y):
                return np.where(idx < p, half, dd + c_prev[p] / 2.0 + y)

            lo, hi = (c_prev[p - 1] - c_prev[p]) / 2.0, 0.0

    y = _frontier_level(lambda y: feasible(b(y)), lo, hi, level_tol)
    return AumannOutcome(unsort(b(y)), branch, int(p), float(y), tuple(int(i) for i in order))


def _smallest(lo: int, hi: int, pred: Callable[[int], bool]) -> int:
    """Smallest integer in ``[lo, hi]`` satisfying a monotone ``pred``.

    ``pred(hi)`` is assumed true.
    """
    while lo < hi:
        mid = (lo + hi) // 2
        if pred(mid):
            hi = mid
        else:
            lo = mid + 1
    return lo


def _frontier_level(pred, lo: float, hi: float, tol: float) -> float:
    """Largest ``y`` in ``[lo, hi]`` with ``pred(y)``; ``pred`` is monotone
    decreasing and ``pred(lo)`` must hold."""
    if not pred(lo):
        raise SolverError("frontier search could not bracket the frontier")
    if pred(hi):
        return hi
    scale = max(1.0, abs(lo), abs(hi))
    for _ in range(BISECTION_STEPS):
        if hi - lo <= tol * scale:
            break
        mid = 0.5 * (lo + hi)
        if pred(mid):
            lo = mid
        else:
            hi = mid
    return lo


def aumann_bargaining_single(bset: BargainingSet, d) -> np.ndarray:
    """Aumann point of a single-commodity bargaining set.

    Claims are the surpluses ``I_n - d_n`` over the ideal vector at ``d``.
    """
    d = np.asarray(d, dtype=float)
    claims = ideal_point(bset, d) - d
    return aumann_search(claims, d, bset.contains).point
