"""Single-commodity bargaining over a polyhedral utility set.

The utility set is stored in half-space form ``a . x <= b`` with optional
non-negativity per axis.  Ideal points come from one LP per player; the
discrete Raiffa procedure repeatedly moves the disagreement point to the
midpoint between itself and the ideal vector.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from fairshare import lp
from fairshare.errors import InputError, NonConvergenceError, SolverError

MEMBERSHIP_TOL = 1e-9
DEFAULT_EPSILON = 1e-4
DEFAULT_MAX_STEPS = 200
STALL_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class BargainingSet:
    """Convex set ``{x : normals @ x <= offsets}`` intersected with ``x >= 0``
    on the axes flagged in ``nonnegative``.

    Construction solves one LP per axis to make sure every coordinate is
    bounded above; the maxima are kept in ``upper_corner``.  The set is not
    checked for comprehensiveness.
    """

    normals: np.ndarray
    offsets: np.ndarray
    nonnegative: np.ndarray

    def __init__(self, normals, offsets, nonnegative=True):
        A = np.atleast_2d(np.asarray(normals, dtype=float))
        b = np.asarray(offsets, dtype=float).ravel()
        if A.shape[0] != b.size:
            raise InputError(f"{A.shape[0]} normals but {b.size} offsets")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise InputError("half-spaces must have finite data")
        n = A.shape[1]
        if n == 0:
            raise InputError("bargaining set needs at least one player")
        nonneg = np.broadcast_to(np.asarray(nonnegative, dtype=bool), (n,)).copy()
        for arr in (A, b, nonneg):
            arr.setflags(write=False)
        object.__setattr__(self, "normals", A)
        object.__setattr__(self, "offsets", b)
        object.__setattr__(self, "nonnegative", nonneg)
        object.__setattr__(self, "upper_corner", self._bounding_box())

    @property
    def dimension(self) -> int:
        return self.normals.shape[1]

    @property
    def lower_bounds(self) -> list:
        return [0.0 if flag else None for flag in self.nonnegative]

    def constraints(self) -> list:
        return [lp.le(a, b) for a, b in zip(self.normals, self.offsets)]

    def contains(self, x, tol: float = MEMBERSHIP_TOL) -> bool:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dimension,):
            raise InputError(f"point has shape {x.shape}, expected ({self.dimension},)")
        if np.any(x[self.nonnegative] < -tol):
            return False
        return bool(np.all(self.normals @ x <= self.offsets + tol))

    def _bounding_box(self):
        n = self.dimension
        corner = np.empty(n)
        for i in range(n):
            obj = np.zeros(n)
            obj[i] = 1.0
            sol = lp.solve(lp.LinearProgram(obj, self.constraints(), lower=self.lower_bounds))
            if sol.status is lp.Status.INFEASIBLE:
                raise InputError("bargaining set is empty")
            if sol.status is lp.Status.UNBOUNDED:
                raise InputError(f"bargaining set is unbounded along axis {i}")
            corner[i] = sol.objective_value
        corner.setflags(write=False)
        return corner

    def transformed(self, scale, shift) -> "BargainingSet":
        """Image of the set under ``x -> scale * x + shift`` (``scale > 0``).

        Non-negativity turns into the explicit half-space ``x_i >= shift_i``.
        """
        scale = np.asarray(scale, dtype=float)
        shift = np.asarray(shift, dtype=float)
        if np.any(scale <= 0):
            raise InputError("affine scale factors must be positive")
        A = self.normals / scale
        b = self.offsets + A @ shift
        extra_A, extra_b = [], []
        for i in np.flatnonzero(self.nonnegative):
            row = np.zeros(self.dimension)
            row[i] = -1.0
            extra_A.append(row)
            extra_b.append(-shift[i])
        if extra_A:
            A = np.vstack([A, extra_A])
            b = np.concatenate([b, extra_b])
        return BargainingSet(A, b, nonnegative=False)


@dataclass(frozen=True)
class RaiffaStep:
    step: int
    midpoint: np.ndarray
    ideal: np.ndarray
    residual: float


def ideal_point(bset: BargainingSet, d) -> np.ndarray:
    """Best value each player can reach while everybody else stays at ``d``."""
    d = np.asarray(d, dtype=float)
    if not bset.contains(d):
        raise InputError("disagreement point lies outside the bargaining set")
    n = bset.dimension
    base = bset.constraints()
    ideal = np.empty(n)
    for i in range(n):
        cons = list(base)
        for p in range(n):
            e = np.zeros(n)
            e[p] = 1.0
            cons.append(lp.ge(e, d[p]) if p == i else lp.eq(e, d[p]))
        obj = np.zeros(n)
        obj[i] = 1.0
        sol = lp.solve(lp.LinearProgram(obj, cons, lower=bset.lower_bounds))
        if not sol.optimal:
            raise SolverError(f"ideal point LP for player {i} is {sol.status.value}")
        ideal[i] = sol.objective_value
    return ideal


def midpoint(ideal, d, n_players: int | None = None) -> np.ndarray:
    ideal = np.asarray(ideal, dtype=float)
    d = np.asarray(d, dtype=float)
    n = ideal.size if n_players is None else n_players
    # same as I/N + (1 - 1/N) d, but exact when I == d
    return d + (ideal - d) / n


def frontier_residual(bset: BargainingSet, m, ideal) -> float:
    """Upper bound on the distance from ``m`` to the Pareto frontier.

    ``max_n |I_n - m_n|``: the point that raises one coordinate of ``m`` to
    its ideal value sits on the frontier, so the true distance is no larger.
    """
    m = np.asarray(m, dtype=float)
    if not bset.contains(m):
        raise InputError("midpoint lies outside the bargaining set")
    return float(np.max(np.abs(np.asarray(ideal, dtype=float) - m)))


def raiffa_solve(
    bset: BargainingSet,
    d,
    epsilon: float = DEFAULT_EPSILON,
    max_steps: int = DEFAULT_MAX_STEPS,
) -> tuple[np.ndarray, list[RaiffaStep]]:
    """Discrete Raiffa procedure.

    Returns the final agreement and the trace.  Step 0 of the trace is the
    disagreement point itself; each later step holds the midpoint reached,
    the ideal vector seen from it and the residual.  Stops once the residual
    is at most ``epsilon`` or the midpoint stops moving.
    """
    if epsilon <= 0:
        raise InputError("epsilon must be positive")
    m = np.asarray(d, dtype=float).copy()
    ideal = ideal_point(bset, m)
    residual = frontier_residual(bset, m, ideal)
    trace = [RaiffaStep(0, m, ideal, residual)]
    n = bset.dimension
    while residual > epsilon:
        if len(trace) > max_steps:
            raise NonConvergenceError(
                f"Raiffa procedure did not reach residual {epsilon} in {max_steps} steps",
                trace,
            )
        nxt = midpoint(ideal, m, n)
        stalled = float(np.max(np.abs(nxt - m))) <= STALL_TOL
        m = nxt
        ideal = ideal_point(bset, m)
        residual = frontier_residual(bset, m, ideal)
        trace.append(RaiffaStep(len(trace), m, ideal, residual))
        if stalled:
            break
    return m, trace


def halfspaces_from_lines(lines: Sequence[tuple[float, float]]):
    """Helper for two-player sets bounded by ``x2 <= intercept + slope * x1``.

    Returns ``(normals, offsets)``.
    """
    normals = [(-slope, 1.0) for _, slope in lines]
    offsets = [intercept for intercept, _ in lines]
    return np.array(normals), np.array(offsets)
