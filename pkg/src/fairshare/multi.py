"""Multi-commodity bargaining: N players share K divisible commodities.

Player n values commodity k at ``u[n, k]`` and an allocation matrix ``alpha``
(rows players, columns commodities, column sums at most one) gives player n
the utility ``sum_k alpha[n, k] * u[n, k]``.  Every solver here reduces to a
sequence of LPs over ``alpha``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from fairshare import lp
from fairshare.bankruptcy import AumannOutcome, aumann_search
from fairshare.errors import InputError, NonConvergenceError, SolverError

DEFAULT_EPSILON = 1e-4
DEFAULT_MAX_STEPS = 200
SHARE_TOL = 1e-7
STALL_TOL = 1e-12

RAIFFA = "raiffa"
AUMANN = "aumann"


class InconsistentMidpointError(SolverError):
    """A restricted ideal point LP was infeasible although the midpoint
    should be achievable."""


@dataclass(frozen=True)
class MultiProblem:
    """Utilities ``(N, K)``, disagreement utilities and stopping tolerance.

    ``disagreement`` may be given per player ``(N,)`` or per player and
    commodity ``(N, K)``; the latter is summed over commodities.
    """

    utilities: np.ndarray
    disagreement: Optional[np.ndarray] = None
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        u = np.array(self.utilities, dtype=float)
        if u.ndim != 2 or u.shape[0] == 0 or u.shape[1] == 0:
            raise InputError(f"utilities must be a non-empty N x K matrix, got shape {u.shape}")
        if not np.all(np.isfinite(u)) or np.any(u < 0):
            raise InputError("utilities must be finite and non-negative")
        n = u.shape[0]
        if self.disagreement is None:
            d = np.zeros(n)
        else:
            d = np.array(self.disagreement, dtype=float)
            if d.shape == u.shape:
                d = d.sum(axis=1)
            elif d.shape != (n,):
                raise InputError(
                    f"disagreement must have shape ({n},) or {u.shape}, got {d.shape}"
                )
        if not np.all(np.isfinite(d)) or np.any(d < 0):
            raise InputError("disagreement utilities must be finite and non-negative")
        eps = float(self.epsilon)
        if not (np.isfinite(eps) and eps > 0):
            raise InputError("epsilon must be positive")
        if np.any((d >= u.sum(axis=1) / n) & (d > 0)):
            warnings.warn(
                "some disagreement utility is not below an equal 1/N share; "
                "the problem may have no solution",
                stacklevel=2,
            )
        for arr in (u, d):
            arr.setflags(write=False)
        object.__setattr__(self, "utilities", u)
        object.__setattr__(self, "disagreement", d)
        object.__setattr__(self, "epsilon", eps)

    @property
    def n_players(self) -> int:
        return self.utilities.shape[0]

    @property
    def n_commodities(self) -> int:
        return self.utilities.shape[1]

    def utility_of(self, alpha) -> np.ndarray:
        return np.einsum("nk,nk->n", np.asarray(alpha, dtype=float), self.utilities)


@dataclass(frozen=True)
class RaiffaRound:
    """One round of the multi-commodity Raiffa procedure.

    ``midpoint`` is the agreement in force at the start of the round and
    ``allocation`` realises it (``None`` for the initial disagreement point).
    ``ideals[n]`` and ``player_allocations[n]`` come from the restricted ideal
    point LP of player n.
    """

    step: int
    midpoint: np.ndarray
    ideals: np.ndarray
    residual: float
    player_allocations: tuple
    allocation: Optional[np.ndarray]


@dataclass(frozen=True)
class AumannTrace:
    claims: np.ndarray
    branch: str
    pivot: int
    level: float
    order: tuple


@dataclass(frozen=True)
class MultiSolution:
    allocation: np.ndarray
    utilities: np.ndarray
    method: str
    trace: object = field(default=None, repr=False)


def _column_rows(n, k, relation):
    rows = []
    for j in range(k):
        row = np.zeros((n, k))
        row[:, j] = 1.0
        rows.append(lp.Constraint(row.ravel(), relation, 1.0))
    return rows


def _utility_row(u, player):
    row = np.zeros(u.shape)
    row[player] = u[player]
    return row.ravel()


def rip_ideal(problem: MultiProblem, m, player: int) -> tuple[float, np.ndarray]:
    """Restricted ideal point of ``player`` with everyone else pinned at ``m``.

    Solves ``max sum_k alpha[n,k] u[n,k]`` over allocations with column sums
    equal to one, ``u_p(alpha) = m_p`` for ``p != n`` and ``u_n(alpha) >= m_n``.
    """
    u = problem.utilities
    n, k = u.shape
    m = np.asarray(m, dtype=float)
    cons = _column_rows(n, k, lp.Relation.EQ)
    for p in range(n):
        rel = lp.Relation.GE if p == player else lp.Relation.EQ
        cons.append(lp.Constraint(_utility_row(u, p), rel, m[p]))
    sol = lp.solve(lp.LinearProgram(_utility_row(u, player), cons))
    if not sol.optimal:
        raise InconsistentMidpointError(
            f"restricted ideal point LP for player {player} is {sol.status.value} at {m}"
        )
    return sol.objective_value, sol.values.reshape(n, k)


def two_player_ideal(u, target: float, for_player: int) -> tuple[float, np.ndarray]:
    """Closed-form restricted ideal point for two players.

    The other player is pinned at ``target``.  Commodities are ranked by how
    much the pinned player values them relative to ``for_player`` and handed
    to the pinned player in that order until the target is met; at most one
    commodity ends up split.
    """
    u = np.asarray(u, dtype=float)
    if u.ndim != 2 or u.shape[0] != 2:
        raise InputError("two_player_ideal needs a 2 x K utility matrix")
    if for_player not in (0, 1):
        raise InputError("for_player must be 0 or 1")
    other = 1 - for_player
    mine, theirs = u[for_player], u[other]
    total = float(theirs.sum())
    if target < 0 or target > total + 1e-9 * max(1.0, total):
        raise InputError(f"target {target} outside [0, {total}]")

    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(mine > 0, theirs / mine, np.inf)
    ratio = np.where((mine == 0) & (theirs == 0), -1.0, ratio)
    ranked = sorted(range(u.shape[1]), key=lambda j: -ratio[j])

    alpha = np.zeros_like(u)
    alpha[for_player] = 1.0
    need = float(target)
    for j in ranked:
        if need <= 0:
            break
        if theirs[j] <= 0:
            continue
        take = min(1.0, need / theirs[j])
        alpha[other, j] = take
        alpha[for_player, j] = 1.0 - take
        need -= take * theirs[j]
    return float(alpha[for_player] @ mine), alpha


def shared_commodity_count(alpha, tol: float = SHARE_TOL) -> int:
    """Number of commodities held by two or more players above ``tol``."""
    alpha = np.asarray(alpha, dtype=float)
    return int(np.sum((alpha > tol).sum(axis=0) >= 2))


def achievable(problem: MultiProblem, target) -> lp.Feasibility:
    """Is there an allocation (column sums <= 1) giving exactly ``target``?"""
    u = problem.utilities
    n, k = u.shape
    cons = _column_rows(n, k, lp.Relation.LE)
    for p in range(n):
        cons.append(lp.eq(_utility_row(u, p), target[p]))
    return lp.solve_feasibility(cons)


def basic_allocation(problem: MultiProblem, target, exact_columns: bool = False) -> np.ndarray:
    """Vertex allocation realising ``target``.

    With ``exact_columns`` every commodity must be fully handed out; otherwise
    column sums may fall short and the allocated mass is maximised instead,
    which still hands out whatever nobody needs for their utility.
    """
    u = problem.utilities
    n, k = u.shape
    relation = lp.Relation.EQ if exact_columns else lp.Relation.LE
    cons = _column_rows(n, k, relation)
    for p in range(n):
        cons.append(lp.eq(_utility_row(u, p), target[p]))
    obj = np.zeros(n * k) if exact_columns else np.ones(n * k)
    sol = lp.solve(lp.LinearProgram(obj, cons))
    if not sol.optimal:
        raise SolverError(f"no allocation realises utilities {np.asarray(target)}")
    alpha = np.clip(sol.values.reshape(n, k), 0.0, 1.0)
    # targets accepted within the LP feasibility tolerance can overfill a column slightly
    return alpha / np.maximum(alpha.sum(axis=0), 1.0)


def _ideal(problem, m, player, fast):
    if fast and problem.n_players == 2:
        value, alpha = two_player_ideal(problem.utilities, m[1 - player], player)
        return value, alpha
    return rip_ideal(problem, m, player)


def raiffa_multi(
    problem: MultiProblem,
    max_steps: int = DEFAULT_MAX_STEPS,
    fast_two_player: bool = True,
) -> MultiSolution:
    """Multi-commodity discrete Raiffa solution.

    Each round solves one restricted ideal point LP per player, then moves
    every player a 1/N fraction of the way from the current agreement towards
    its ideal value; averaging the N ideal allocations realises the new
    agreement.  Stops once ``max_n (I_n - m_n) <= epsilon``.
    """
    n = problem.n_players
    m = problem.disagreement.copy()
    current = None
    rounds = []
    while True:
        results = [_ideal(problem, m, p, fast_two_player) for p in range(n)]
        ideals = np.array([r[0] for r in results])
        allocs = tuple(r[1] for r in results)
        residual = float(np.max(ideals - m))
        rounds.append(RaiffaRound(len(rounds), m, ideals, residual, allocs, current))
        if residual <= problem.epsilon:
            break
        if len(rounds) > max_steps:
            raise NonConvergenceError(
                f"multi-commodity Raiffa did not converge in {max_steps} steps", rounds
            )
        nxt = m + (ideals - m) / n
        current = np.mean(allocs, axis=0)
        stalled = float(np.max(np.abs(nxt - m))) <= STALL_TOL
        m = nxt
        if stalled:
            rounds.append(RaiffaRound(len(rounds), m, ideals, residual, allocs, current))
            break
    if current is None:
        current = rounds[-1].player_allocations[0]
    final = _vertex_or(problem, m, current)
    return MultiSolution(final, problem.utility_of(final), RAIFFA, tuple(rounds))


def _vertex_or(problem, target, fallback):
    try:
        alpha = basic_allocation(problem, target, exact_columns=True)
    except SolverError:
        return fallback
    return alpha


def aumann_multi(problem: MultiProblem) -> MultiSolution:
    """Multi-commodity Aumann bargaining solution.

    Claims are restricted ideal points at the disagreement point minus the
    disagreement utilities.  Branch choice, pivot player and water level are
    found by the shared water-filling search, with LP feasibility standing in
    for set membership.
    """
    d = problem.disagreement
    n = problem.n_players
    claims = np.array([rip_ideal(problem, d, p)[0] for p in range(n)]) - d
    claims = np.maximum(claims, 0.0)
    outcome: AumannOutcome = aumann_search(
        claims, d, lambda x: achievable(problem, x).feasible
    )
    alpha = basic_allocation(problem, outcome.point)
    trace = AumannTrace(claims, outcome.branch, outcome.pivot, outcome.level, outcome.order)
    return MultiSolution(alpha, problem.utility_of(alpha), AUMANN, trace)
