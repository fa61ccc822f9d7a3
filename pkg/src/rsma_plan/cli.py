"""Command line front end: ``rsma-plan check|vertex|split|verify|sample``.

Exit codes: 0 success, 1 semantic failure (not on the dominant face,
verification failed), 2 usage or parse error.
"""

from __future__ import annotations

import argparse
import sys
from typing import List, Optional, Sequence

from . import __version__
from .allocation import Status, polymatroid_membership, validate_permutation, vertex_rates
from .errors import NotOnDominantFace, PlannerError, ValidationError
from .planfile import (Problem, dumps, load_problem, loads, plan_from_dict, plan_to_dict,
                       problem_to_dict)
from .shannon import DEFAULT_TOLERANCE
from .splitter import SplitPlan, compute_split_plan
from .verifier import VerificationReport, random_problem, verify_plan

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _read(path: str) -> str:
    try:
        if path == "-":
            return sys.stdin.read()
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc


def _write(path: Optional[str], text: str):
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _tolerance(args, problem_tol: Optional[float]) -> float:
    if args.tolerance is not None:
        return args.tolerance
    return problem_tol if problem_tol is not None else DEFAULT_TOLERANCE


def _users(indices: Sequence[int]) -> str:
    return "{" + ",".join(str(k + 1) for k in indices) + "}"


def stack_diagram(plan: SplitPlan, width: int = 40) -> str:
    """Text picture of the virtual users, noise floor on the bottom row."""
    ra = plan.ra
    total = sum(ra.powers)
    rows = []
    position = {k: pos + 1 for pos, k in enumerate(plan.decode_order)}
    header = f"{'decode':>6}  {'NIS':>12}  {'power':>12}  {'rate':>10}  owner"
    for k in plan.decode_order:
        v = plan.virtual_users[k]
        bar = "#" * max(1, round(width * v.power / total))
        rows.append(f"{position[k]:>6}  {v.nis:>12.6g}  {v.power:>12.6g}  "
                    f"{v.rate:>10.6g}  user {v.label:<5} {bar}")
    rows.append(f"{'':>6}  {0.0:>12.6g}  {ra.noise:>12.6g}  {'':>10}  noise")
    return "\n".join([header] + rows) + "\n"


def _report_text(report: VerificationReport) -> str:
    lines = [
        f"verification: {'PASS' if report.ok else 'FAIL'}",
        f"  stacking: {'ok' if report.stacking_ok else 'BROKEN'} "
        f"(max gap {report.max_stack_gap:.3g})",
        f"  virtual users: {report.virtual_count}",
        f"  max rate error: {report.max_rate_error:.3g} bit "
        f"(tolerance {report.rate_tolerance:.3g})",
    ]
    return "\n".join(lines) + "\n"


def cmd_check(args) -> int:
    problem = load_problem(_read(args.problem))
    ra = problem.allocation()
    tol = _tolerance(args, problem.tolerance)
    verdict = polymatroid_membership(ra, tol)
    if args.format == "json":
        _write(args.output, dumps({
            "status": str(verdict.status),
            "violated_subset": None if verdict.violated_subset is None
            else [k + 1 for k in verdict.violated_subset],
            "violation": verdict.violation,
            "sum_rate_gap": verdict.sum_rate_gap,
        }))
    else:
        _write(args.output, verdict.describe() + "\n")
    return EXIT_OK if verdict.status is Status.DOMINANT_FACE else EXIT_FAIL


def _parse_perm(text: Optional[str], n: int):
    if text is None:
        return tuple(range(n))
    try:
        pi = tuple(int(x) - 1 for x in text.split(","))
    except ValueError as exc:
        raise UsageError(f"bad permutation {text!r}") from exc
    try:
        return validate_permutation(pi, n)
    except ValidationError as exc:
        raise UsageError(f"permutation {text!r} is not a bijection on 1..{n}") from exc


def cmd_vertex(args) -> int:
    problem = load_problem(_read(args.problem))
    pi = _parse_perm(args.perm, len(problem.powers))
    rates = vertex_rates(problem.powers, problem.noise, pi)
    decode = [k + 1 for k in reversed(pi)]
    if args.format == "json":
        _write(args.output, dumps({"permutation": [k + 1 for k in pi], "rates": list(rates),
                                   "decode_order": decode}))
    else:
        text = "rates: " + " ".join(f"{r:.6f}" for r in rates) + "\n"
        text += "decode order: " + " -> ".join(map(str, decode)) + "\n"
        _write(args.output, text)
    return EXIT_OK


def cmd_split(args) -> int:
    problem = load_problem(_read(args.problem))
    ra = problem.allocation()
    tol = _tolerance(args, problem.tolerance)
    try:
        plan = compute_split_plan(ra, tol)
    except NotOnDominantFace as exc:
        print(f"error: {exc.verdict.describe()}", file=sys.stderr)
        return EXIT_FAIL
    report = verify_plan(plan, ra, tol)
    data = plan_to_dict(plan, report, tol, emit_tree=args.emit_tree)
    if args.output is not None:
        _write(args.output, dumps(data))
    if args.format == "json":
        if args.output is None:
            _write(None, dumps(data))
    else:
        text = "epsilon: " + " ".join(f"{e:.6g}" for e in plan.epsilon) + "\n"
        text += "decode order: " + " -> ".join(data["decode_order"]) + "\n\n"
        text += stack_diagram(plan) + "\n" + _report_text(report)
        sys.stdout.write(text)
    return EXIT_OK if report.ok else EXIT_FAIL


def cmd_verify(args) -> int:
    plan, file_tol = plan_from_dict(loads(_read(args.plan)))
    tol = _tolerance(args, file_tol)
    report = verify_plan(plan, plan.ra, tol)
    if args.format == "json":
        _write(args.output, dumps(report.to_dict()))
    else:
        _write(args.output, _report_text(report))
    return EXIT_OK if report.ok else EXIT_FAIL


def cmd_sample(args) -> int:
    if args.powers is not None:
        try:
            powers = [float(x) for x in args.powers.split(",")]
        except ValueError as exc:
            raise UsageError(f"bad power list {args.powers!r}") from exc
        n = len(powers)
    elif args.n is not None:
        powers, n = None, args.n
    else:
        raise UsageError("give --n or --powers")
    if n < 1:
        raise UsageError("need at least one user")
    ra = random_problem(n, args.seed, noise=args.noise, n_vertices=args.vertices,
                        powers=powers)
    problem = Problem(ra.powers, ra.noise, ra.rates, args.tolerance)
    _write(args.output, dumps(problem_to_dict(problem)))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tolerance", type=float, default=None,
                        help=f"relative equality tolerance (default {DEFAULT_TOLERANCE:g})")
    common.add_argument("--format", choices=("json", "text"), default="text")
    common.add_argument("--output", "-o", default=None, help="write output to this path")

    parser = argparse.ArgumentParser(
        prog="rsma-plan",
        description="Rate-splitting planner for the Gaussian multi-access channel.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", parents=[common], help="locate a rate tuple in the capacity region")
    p.add_argument("problem", help="problem JSON file ('-' for stdin)")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("vertex", parents=[common], help="rates of one polymatroid vertex")
    p.add_argument("problem")
    p.add_argument("--perm", help="comma-separated 1-based permutation (default identity); "
                                  "the first user sees only the noise")
    p.set_defaults(func=cmd_vertex)

    p = sub.add_parser("split", parents=[common], help="compute and verify a splitting plan")
    p.add_argument("problem")
    p.add_argument("--emit-tree", action="store_true", help="include the combination tree")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("verify", parents=[common], help="re-verify a plan file")
    p.add_argument("plan")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sample", parents=[common],
                       help="write a random dominant-face problem (test helper)")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--n", type=int, help="number of users (random powers in [0.1, 10])")
    p.add_argument("--powers", help="comma-separated powers instead of random ones")
    p.add_argument("--noise", type=float, default=1.0)
    p.add_argument("--vertices", type=int, default=None,
                   help="number of random vertices to mix (default n)")
    p.set_defaults(func=cmd_sample)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    if args.tolerance is not None and not args.tolerance > 0:
        print("error: --tolerance must be positive", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (UsageError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PlannerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
