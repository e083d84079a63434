"""Dense two-phase simplex solver.

Every linear program in the package goes through :func:`solve`.  Problems are
small (a few dozen rows and columns), so the tableau is kept as a dense numpy
array and pivoting follows Bland's rule, which rules out cycling at the cost of
a few extra iterations.

Variables are maximised over; lower bounds default to zero and may be ``None``
(free variable).  Upper bounds are optional.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from fairshare.errors import InputError, SolverStallError

FEAS_TOL = 1e-9
OPT_TOL = 1e-9
PIVOT_TOL = 1e-11


class Relation(str, enum.Enum):
    LE = "<="
    EQ = "=="
    GE = ">="


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class Constraint:
    """``coefficients . x  (relation)  rhs``."""

    coefficients: np.ndarray
    relation: Relation
    rhs: float

    def __post_init__(self):
        coef = np.array(self.coefficients, dtype=float).ravel()
        coef.setflags(write=False)
        object.__setattr__(self, "coefficients", coef)
        object.__setattr__(self, "relation", Relation(self.relation))
        object.__setattr__(self, "rhs", float(self.rhs))

    def residual(self, x: np.ndarray) -> float:
        """Amount by which ``x`` violates the constraint (0 when satisfied)."""
        lhs = float(self.coefficients @ x)
        if self.relation is Relation.LE:
            return max(lhs - self.rhs, 0.0)
        if self.relation is Relation.GE:
            return max(self.rhs - lhs, 0.0)
        return abs(lhs - self.rhs)


def le(coefficients, rhs) -> Constraint:
    return Constraint(coefficients, Relation.LE, rhs)


def ge(coefficients, rhs) -> Constraint:
    return Constraint(coefficients, Relation.GE, rhs)


def eq(coefficients, rhs) -> Constraint:
    return Constraint(coefficients, Relation.EQ, rhs)


@dataclass(frozen=True)
class LinearProgram:
    """Maximise ``objective . x`` subject to ``constraints`` and bounds.

    ``lower`` defaults to all zeros; an entry of ``None`` or ``-inf`` makes the
    variable free below.  ``upper`` defaults to no upper bounds.
    """

    objective: np.ndarray
    constraints: tuple
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None

    def __post_init__(self):
        c = np.array(self.objective, dtype=float).ravel()
        n = c.size
        if n == 0:
            raise InputError("linear program has no variables")
        if not np.all(np.isfinite(c)):
            raise InputError("objective coefficients must be finite")
        cons = tuple(
            con if isinstance(con, Constraint) else Constraint(*con)
            for con in self.constraints
        )
        for i, con in enumerate(cons):
            if con.coefficients.size != n:
                raise InputError(
                    f"constraint {i} has {con.coefficients.size} coefficients, "
                    f"expected {n}"
                )
            if not np.all(np.isfinite(con.coefficients)) or not np.isfinite(con.rhs):
                raise InputError(f"constraint {i} has non-finite data")
        lower = _bound_array(self.lower, n, 0.0, -np.inf, "lower")
        upper = _bound_array(self.upper, n, np.inf, np.inf, "upper")
        if np.any(lower == np.inf) or np.any(upper == -np.inf):
            raise InputError("bounds must not exclude every value")
        if np.any(lower > upper):
            raise InputError("lower bound exceeds upper bound")
        for arr in (c, lower, upper):
            arr.setflags(write=False)
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "constraints", cons)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def num_variables(self) -> int:
        return self.objective.size

    def max_violation(self, x: np.ndarray) -> float:
        worst = max((con.residual(x) for con in self.constraints), default=0.0)
        worst = max(worst, float(np.max(self.lower - x, initial=0.0)))
        return max(worst, float(np.max(x - self.upper, initial=0.0)))


def _bound_array(values, n, default, none_value, name):
    if values is None:
        return np.full(n, default)
    out = np.array(
        [none_value if v is None else v for v in values], dtype=float
    ).ravel()
    if out.size != n:
        raise InputError(f"{name} bounds have length {out.size}, expected {n}")
    if np.any(np.isnan(out)):
        raise InputError(f"{name} bounds contain NaN")
    return out


@dataclass(frozen=True)
class LpSolution:
    """Result of :func:`solve`.

    ``basis`` lists the basic columns of the standard-form problem at
    termination: structural columns first (after bound shifting and free
    variable splitting), then one slack column per inequality row.
    """

    status: Status
    values: Optional[np.ndarray] = None
    objective_value: Optional[float] = None
    basis: tuple = ()
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


@dataclass(frozen=True)
class Feasibility:
    feasible: bool
    values: Optional[np.ndarray] = None

    def __bool__(self):
        return self.feasible


class _StandardForm:
    """``A x' = b, x' >= 0`` with ``b >= 0``, plus the map back to ``x``."""

    def __init__(self, lp: LinearProgram):
        n = lp.num_variables
        # Each original variable j becomes sum_t sign_t * x'_{col_t} + offset_j.
        cols = []  # (original index, sign)
        offset = np.zeros(n)
        extra_rows = []  # (structural column, bound) for x' <= bound
        for j in range(n):
            lo, hi = lp.lower[j], lp.upper[j]
            if np.isfinite(lo):
                offset[j] = lo
                cols.append((j, 1.0))
                if np.isfinite(hi):
                    extra_rows.append((len(cols) - 1, hi - lo))
            elif np.isfinite(hi):
                offset[j] = hi
                cols.append((j, -1.0))
            else:
                cols.append((j, 1.0))
                cols.append((j, -1.0))
        ns = len(cols)
        conv = np.zeros((n, ns))
        for t, (j, sign) in enumerate(cols):
            conv[j, t] = sign
        self.conv = conv
        self.offset = offset
        self.n_struct = ns

        rows, rels, rhs = [], [], []
        for con in lp.constraints:
            rows.append(con.coefficients @ conv)
            rels.append(con.relation)
            rhs.append(con.rhs - float(con.coefficients @ offset))
        for t, bound in extra_rows:
            row = np.zeros(ns)
            row[t] = 1.0
            rows.append(row)
            rels.append(Relation.LE)
            rhs.append(bound)
        m = len(rows)
        A = np.array(rows, dtype=float).reshape(m, ns)
        b = np.array(rhs, dtype=float)
        for i in range(m):
            if b[i] < 0:
                A[i] = -A[i]
                b[i] = -b[i]
                if rels[i] is Relation.LE:
                    rels[i] = Relation.GE
                elif rels[i] is Relation.GE:
                    rels[i] = Relation.LE

        n_slack = sum(r is not Relation.EQ for r in rels)
        slack = np.zeros((m, n_slack))
        basis = [-1] * m
        need_art = []
        s = 0
        for i, rel in enumerate(rels):
            if rel is Relation.LE:
                slack[i, s] = 1.0
                basis[i] = ns + s
                s += 1
            elif rel is Relation.GE:
                slack[i, s] = -1.0
                need_art.append(i)
                s += 1
            else:
                need_art.append(i)
        n_art = len(need_art)
        art = np.zeros((m, n_art))
        for a, i in enumerate(need_art):
            art[i, a] = 1.0
            basis[i] = ns + n_slack + a

        self.A = np.hstack([A, slack])
        self.b = b
        self.n_slack = n_slack
        self.n_art = n_art
        self.art = art
        self.basis = basis
        self.c = np.concatenate([lp.objective @ conv, np.zeros(n_slack)])
        self.const = float(lp.objective @ offset)

    def recover(self, xs: np.ndarray) -> np.ndarray:
        return self.conv @ xs[: self.n_struct] + self.offset


class _Tableau:
    def __init__(self, A, b, basis, iter_limit):
        m, n = A.shape
        self.T = np.zeros((m + 1, n + 1))
        self.T[:m, :n] = A
        self.T[:m, n] = b
        self.basis = list(basis)
        self.iterations = 0
        self.iter_limit = iter_limit

    @property
    def m(self):
        return self.T.shape[0] - 1

    def set_objective(self, c):
        """Install reduced costs ``c_B B^-1 A - c`` for maximising ``c . x``."""
        cb = c[self.basis]
        self.T[-1, :] = cb @ self.T[:-1, :]
        self.T[-1, :-1] -= c

    def pivot(self, r, col):
        T = self.T
        T[r] /= T[r, col]
        factor = T[:, col].copy()
        factor[r] = 0.0
        T -= np.outer(factor, T[r])
        T[:, col] = 0.0
        T[r, col] = 1.0
        self.basis[r] = col

    def run(self, allowed: int) -> bool:
        """Bland's rule iterations over columns ``< allowed``; False if unbounded."""
        T = self.T
        while True:
            d = T[-1, :allowed]
            cand = np.flatnonzero(d < -OPT_TOL)
            if cand.size == 0:
                return True
            col = int(cand[0])
            column = T[:-1, col]
            rows = np.flatnonzero(column > PIVOT_TOL)
            if rows.size == 0:
                return False
            ratios = T[rows, -1] / column[rows]
            best = ratios.min()
            ties = rows[ratios <= best + 1e-12 * max(1.0, abs(best))]
            r = min(ties, key=lambda i: self.basis[i])
            self.iterations += 1
            if self.iterations > self.iter_limit:
                raise SolverStallError(
                    f"simplex exceeded {self.iter_limit} iterations"
                )
            self.pivot(int(r), col)


def solve(lp: LinearProgram, max_iterations: Optional[int] = None) -> LpSolution:
    """Solve ``lp`` with the two-phase simplex method.

    Raises:
        InputError: malformed dimensions (raised while building ``lp``).
        SolverStallError: the iteration limit, by default
            ``50 * (rows + columns)`` of the standard form, was exceeded.
    """
    sf = _StandardForm(lp)
    m = sf.A.shape[0]
    n_real = sf.A.shape[1]
    A_full = np.hstack([sf.A, sf.art])
    if max_iterations is None:
        max_iterations = 50 * (m + A_full.shape[1])
    tab = _Tableau(A_full, sf.b, sf.basis, max_iterations)

    if sf.n_art:
        c1 = np.zeros(A_full.shape[1])
        c1[n_real:] = -1.0
        tab.set_objective(c1)
        tab.run(A_full.shape[1])
        if -tab.T[-1, -1] > FEAS_TOL:
            return LpSolution(Status.INFEASIBLE, iterations=tab.iterations)
        _drive_out_artificials(tab, n_real)
        tab.T = np.delete(tab.T, np.s_[n_real:-1], axis=1)
    tab.set_objective(sf.c)
    if not tab.run(n_real):
        return LpSolution(Status.UNBOUNDED, iterations=tab.iterations)

    xs = np.zeros(n_real)
    xs[tab.basis] = tab.T[:-1, -1]
    xs = _refine(sf, tab.basis, xs)
    x = sf.recover(xs)
    return LpSolution(
        Status.OPTIMAL,
        values=x,
        objective_value=float(lp.objective @ x),
        basis=tuple(sorted(tab.basis)),
        iterations=tab.iterations,
    )


def _drive_out_artificials(tab: _Tableau, n_real: int) -> None:
    r = 0
    while r < tab.m:
        if tab.basis[r] < n_real:
            r += 1
            continue
        row = tab.T[r, :n_real]
        nz = np.flatnonzero(np.abs(row) > 1e-9)
        if nz.size:
            tab.pivot(r, int(nz[0]))
            r += 1
        else:
            # redundant equality row
            tab.T = np.delete(tab.T, r, axis=0)
            del tab.basis[r]


def _refine(sf: _StandardForm, basis, xs):
    """Recompute basic values from the original matrix to shed pivoting error."""
    rows = _rows_for_basis(sf, basis)
    B = sf.A[np.ix_(rows, basis)]
    try:
        xb = np.linalg.solve(B, sf.b[rows])
    except np.linalg.LinAlgError:
        return xs
    if np.any(xb < -1e-7) or not np.all(np.isfinite(xb)):
        return xs
    out = np.zeros_like(xs)
    out[basis] = np.maximum(xb, 0.0)
    if np.max(np.abs(sf.A @ out - sf.b), initial=0.0) > np.max(
        np.abs(sf.A @ xs - sf.b), initial=0.0
    ):
        return xs
    return out


def _rows_for_basis(sf, basis):
    m = sf.A.shape[0]
    if len(basis) == m:
        return list(range(m))
    # Redundant rows were dropped; keep a maximal independent subset.
    B = sf.A[:, basis]
    chosen = []
    for i in range(m):
        trial = chosen + [i]
        if np.linalg.matrix_rank(B[trial]) == len(trial):
            chosen = trial
        if len(chosen) == len(basis):
            break
    return chosen


def solve_feasibility(
    constraints: Sequence[Constraint],
    lower=None,
    upper=None,
    max_iterations: Optional[int] = None,
) -> Feasibility:
    """Decide whether ``constraints`` (and bounds) admit a point.

    A witness is returned with feasible systems.  Only phase one does real
    work here since the objective is zero.
    """
    cons = tuple(constraints)
    if not cons:
        raise InputError("feasibility check needs at least one constraint")
    n = len(cons[0].coefficients)
    lp = LinearProgram(np.zeros(n), cons, lower=lower, upper=upper)
    sol = solve(lp, max_iterations=max_iterations)
    if sol.status is Status.INFEASIBLE:
        return Feasibility(False)
    return Feasibility(True, sol.values)
