"""``fairshare`` command line: solve, verify and compare instances.

Exit codes: 0 success, 1 verification failed, 2 bad input, 3 solver
failure, 4 instance too large.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from fairshare import io, lp, oracle
from fairshare.bankruptcy import ClaimsProblem, cg_rule, talmud_rule
from fairshare.errors import InputError, SizeLimitError, SolverError
from fairshare.multi import (
    DEFAULT_MAX_STEPS,
    MultiProblem,
    aumann_multi,
    raiffa_multi,
    rip_ideal,
)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INPUT = 2
EXIT_SOLVER = 3
EXIT_SIZE = 4

MAX_CELLS = 4096
MAX_PLAYERS = 64
MAX_ITERS_ENV = "FAIRSHARE_MAX_ITERS"
FEASIBILITY_TOL = 1e-7


def _max_steps() -> int:
    raw = os.environ.get(MAX_ITERS_ENV)
    if raw is None:
        return DEFAULT_MAX_STEPS
    try:
        value = int(raw)
    except ValueError:
        raise InputError(f"{MAX_ITERS_ENV} must be a positive integer, got {raw!r}") from None
    if value < 1:
        raise InputError(f"{MAX_ITERS_ENV} must be a positive integer, got {raw!r}")
    return value


def _guard(instance):
    if isinstance(instance, io.ClaimsInstance):
        size, n = instance.claims.size, instance.claims.size
    else:
        n, k = instance.shape
        size = n * k
    if n > MAX_PLAYERS or size > MAX_CELLS:
        raise SizeLimitError(
            f"instance too large: {n} players, {size} utility entries "
            f"(limits {MAX_PLAYERS} players, {MAX_CELLS} entries)"
        )


def _problem(instance: io.MultiInstance, epsilon=None) -> MultiProblem:
    eps = instance.epsilon if epsilon is None else epsilon
    return MultiProblem(instance.utilities, instance.disagreement, eps)


def _pick_method(instance, requested):
    family = io.CLAIMS_METHODS if isinstance(instance, io.ClaimsInstance) else io.MULTI_METHODS
    method = requested or instance.method or family[0]
    if method not in family:
        kind = "claims" if family is io.CLAIMS_METHODS else "multi-commodity"
        raise InputError(f"method {method!r} does not apply to a {kind} instance")
    return method


def _grid_tractable(problem) -> bool:
    return (
        problem.n_players <= oracle.GRID_MAX_PLAYERS
        and problem.n_commodities <= oracle.GRID_MAX_COMMODITIES
    )


def _multi_report(problem, utilities, allocation, method, claims=None):
    report = oracle.allocation_check(problem, allocation, utilities)
    if _grid_tractable(problem):
        report.extend(oracle.grid_pareto_check(problem, utilities, problem.epsilon))
    if method == "aumann":
        if claims is None:
            claims = _claims_at(problem)
        report.extend(oracle.cg_consistency_check(claims, problem.disagreement, utilities))
    return report


def _claims_at(problem):
    d = problem.disagreement
    ideals = [rip_ideal(problem, d, p)[0] for p in range(problem.n_players)]
    return np.maximum(np.array(ideals) - d, 0.0)


def _claims_report(instance, utilities):
    x = np.asarray(utilities, dtype=float)
    report = oracle.VerificationReport()
    gap = abs(float(x.sum()) - instance.estate)
    report.add("awards sum to the estate", gap <= 1e-9 * max(1.0, instance.estate), gap, 1e-9)
    over = float(max(np.max(-x), np.max(x - instance.claims)))
    report.add("awards within [0, claim]", over <= 1e-9, max(over, 0.0), 1e-9)
    report.extend(oracle.cg_consistency_check(instance.claims, np.zeros_like(x), x))
    return report


def solve_instance(instance, method=None, epsilon=None, trace=False) -> io.ResultFile:
    method = _pick_method(instance, method)
    if isinstance(instance, io.ClaimsInstance):
        if method == "cg":
            if instance.claims.size != 2:
                raise InputError("the cg method needs exactly two claimants")
            award = np.array(cg_rule(instance.claims[0], instance.claims[1], instance.estate))
            steps = {"rule": "cg"}
        else:
            result = talmud_rule(ClaimsProblem(instance.claims, instance.estate))
            award = result.amounts
            steps = {"branch": result.rule, "level": result.level}
        report = _claims_report(instance, award)
        return io.ResultFile(
            method=method,
            utilities=io.plain(award),
            allocation=None,
            trace=io.plain(steps) if trace else None,
            verification=io.plain(report.to_dict()),
        )

    problem = _problem(instance, epsilon)
    claims = None
    if method == "raiffa":
        solution = raiffa_multi(problem, max_steps=_max_steps())
        steps = [
            {
                "step": r.step,
                "midpoint": r.midpoint,
                "ideals": r.ideals,
                "residual": r.residual,
            }
            for r in solution.trace
        ]
    else:
        solution = aumann_multi(problem)
        t = solution.trace
        claims = t.claims
        steps = {
            "claims": t.claims,
            "branch": t.branch,
            "pivot": t.pivot,
            "level": t.level,
            "order": list(t.order),
        }
    report = _multi_report(problem, solution.utilities, solution.allocation, method, claims)
    return io.ResultFile(
        method=method,
        utilities=io.plain(solution.utilities),
        allocation=io.plain(solution.allocation),
        trace=io.plain(steps) if trace else None,
        verification=io.plain(report.to_dict()),
        epsilon=problem.epsilon,
    )


def verify_result(instance, result: io.ResultFile, epsilon=None) -> oracle.VerificationReport:
    """Independent checks of a stored result against its instance."""
    utilities = np.asarray(result.utilities, dtype=float)
    if isinstance(instance, io.ClaimsInstance):
        if result.method not in io.CLAIMS_METHODS:
            raise InputError(f"result method {result.method!r} does not match a claims instance")
        if utilities.shape != instance.claims.shape:
            raise InputError(
                f"result has {utilities.size} awards, instance has {instance.claims.size} claimants"
            )
        return _claims_report(instance, utilities)

    if result.method not in io.MULTI_METHODS:
        raise InputError(f"result method {result.method!r} does not match a multi-commodity instance")
    n, k = instance.shape
    if utilities.shape != (n,):
        raise InputError(f"result has {utilities.size} utilities, instance has {n} players")
    if result.allocation is None:
        raise InputError("result has no allocation matrix")
    allocation = np.asarray(result.allocation, dtype=float)
    if allocation.shape != (n, k):
        raise InputError(f"allocation has shape {allocation.shape}, instance is ({n}, {k})")
    if epsilon is None:
        epsilon = result.epsilon if result.epsilon is not None else instance.epsilon
    problem = _problem(instance, epsilon)

    report = oracle.VerificationReport()
    slack = FEASIBILITY_TOL * max(1.0, float(np.max(np.abs(utilities))))
    report.add("utilities achievable", _achievable(problem, utilities - slack), 0.0, slack)
    report.extend(_multi_report(problem, utilities, allocation, result.method))
    return report


def _achievable(problem, floor) -> bool:
    u = problem.utilities
    n, k = u.shape
    cons = []
    for j in range(k):
        row = np.zeros((n, k))
        row[:, j] = 1.0
        cons.append(lp.le(row.ravel(), 1.0))
    for p in range(n):
        row = np.zeros((n, k))
        row[p] = u[p]
        cons.append(lp.ge(row.ravel(), floor[p]))
    return lp.solve_feasibility(cons).feasible


def result_table(result: io.ResultFile) -> str:
    table = io.Table(["player", "utility"])
    for i, value in enumerate(result.utilities, start=1):
        table.add(i, float(value))
    parts = [f"method: {result.method}", table.render()]
    if result.allocation is not None:
        alloc = np.asarray(result.allocation)
        grid = io.Table(["player"] + [f"c{j}" for j in range(1, alloc.shape[1] + 1)])
        for i, row in enumerate(alloc, start=1):
            grid.add(i, *map(float, row))
        parts += ["allocation:", grid.render()]
    if result.trace is not None:
        parts += ["trace:", _trace_text(result.trace)]
    if result.verification is not None:
        status = "PASS" if result.verification.get("overall") else "FAIL"
        parts.append(f"verification: {status}")
    return "\n".join(parts) + "\n"


def _trace_text(trace) -> str:
    if isinstance(trace, list):
        n = len(trace[0]["midpoint"])
        head = ["step"] + [f"m{i}" for i in range(1, n + 1)]
        head += [f"I{i}" for i in range(1, n + 1)] + ["residual"]
        table = io.Table(head)
        for row in trace:
            table.add(row["step"], *map(float, row["midpoint"]), *map(float, row["ideals"]),
                      float(row["residual"]))
        return table.render()
    return "\n".join(f"  {key}: {_fmt(value)}" for key, value in sorted(trace.items()))


def _fmt(value):
    if isinstance(value, float):
        return f"{value:.6f}"
    if isinstance(value, list):
        return "[" + ", ".join(_fmt(v) for v in value) + "]"
    return str(value)


def compare_table(instance: io.MultiInstance, epsilon=None) -> str:
    """Raiffa and Aumann outcomes side by side: utilities, both allocation
    matrices, then the per-player sums."""
    problem = _problem(instance, epsilon)
    raiffa = raiffa_multi(problem, max_steps=_max_steps())
    aumann = aumann_multi(problem)
    n, k = problem.utilities.shape
    table = io.Table(["player"] + [f"c{j}" for j in range(1, k + 1)])

    def block(title, matrix):
        table.add(f"[{title}]")
        for i, row in enumerate(matrix, start=1):
            table.add(i, *map(float, row))

    block("utility of commodities", problem.utilities)
    block("raiffa allocation", raiffa.allocation)
    block("aumann allocation", aumann.allocation)
    sums = io.Table(["player", "raiffa", "aumann"])
    for i in range(n):
        sums.add(i + 1, float(raiffa.utilities[i]), float(aumann.utilities[i]))
    return table.render() + "\n\nsum of utilities per player\n" + sums.render() + "\n"


def _emit(text: str, output):
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_solve(args) -> int:
    instance = io.read_instance(args.instance)
    _guard(instance)
    result = solve_instance(instance, args.method, args.epsilon, args.trace)
    text = io.dump_result(result) if args.format == "json" else result_table(result)
    _emit(text, args.output)
    return EXIT_OK


def _cmd_verify(args) -> int:
    instance = io.read_instance(args.instance)
    _guard(instance)
    result = io.read_result(args.result)
    report = verify_result(instance, result, args.epsilon)
    if args.format == "json":
        text = json.dumps(io.plain(report.to_dict()), indent=2, sort_keys=True) + "\n"
    else:
        text = "\n".join(report.lines()) + f"\noverall: {'PASS' if report.overall else 'FAIL'}\n"
    _emit(text, args.output)
    return EXIT_OK if report.overall else EXIT_FAILED


def _cmd_compare(args) -> int:
    instance = io.read_instance(args.instance)
    if not isinstance(instance, io.MultiInstance):
        raise InputError("compare needs a multi-commodity instance")
    _guard(instance)
    _emit(compare_table(instance, args.epsilon), args.output)
    return EXIT_OK


def _positive(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (np.isfinite(value) and value > 0):
        raise argparse.ArgumentTypeError("epsilon must be a positive finite number")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fairshare",
        description="Fair division of divisible commodities by Raiffa and Aumann bargaining.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--epsilon", type=_positive, help="stopping / verification tolerance")
        p.add_argument("--format", choices=("table", "json"), default="table")
        p.add_argument("--output", "-o", help="write to this file instead of stdout")

    solve = sub.add_parser("solve", help="solve an instance file")
    solve.add_argument("instance")
    solve.add_argument("--method", choices=io.METHODS)
    solve.add_argument("--trace", action="store_true", help="include per-step records")
    common(solve)
    solve.set_defaults(func=_cmd_solve)

    verify = sub.add_parser("verify", help="check a result file against its instance")
    verify.add_argument("instance")
    verify.add_argument("result")
    common(verify)
    verify.set_defaults(func=_cmd_verify)

    compare = sub.add_parser("compare", help="Raiffa and Aumann side by side")
    compare.add_argument("instance")
    common(compare)
    compare.set_defaults(func=_cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except SizeLimitError as exc:
        print(f"fairshare: {exc}", file=sys.stderr)
        return EXIT_SIZE
    except InputError as exc:
        print(f"fairshare: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SolverError as exc:
        print(f"fairshare: solver failed: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
