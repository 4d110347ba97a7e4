#!/usr/bin/env python3
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from qrecone import certify
from qrecone.barriers import Cone, InfeasiblePointError, PSDCone, parse_cone
from qrecone.errors import MeasureError, NumericalFailureError, ProblemFormatError
from qrecone.ipm import INFEASIBLE_START, ITER_LIMIT, NUMERICAL_FAILURE, OPTIMAL, SOLVE_MODES, solve
from qrecone.pinching import iteration_law
from qrecone.problem import load_point, load_problem, matrix_from_json

EXIT_OK = 0
EXIT_CERT_FAILED = 1
EXIT_PARSE = 2
EXIT_INFEASIBLE = 3
EXIT_ITER_LIMIT = 4
EXIT_NUMERICAL = 5

STATUS_EXIT = {
    OPTIMAL: EXIT_OK,
    INFEASIBLE_START: EXIT_INFEASIBLE,
    ITER_LIMIT: EXIT_ITER_LIMIT,
    NUMERICAL_FAILURE: EXIT_NUMERICAL,
}
SUITES = ("sc", "nu", "compat", "lb", "tensor")


def _add_cone_args(parser: argparse.ArgumentParser, required: bool = True) -> None:
    parser.add_argument("--cone", required=required, help='Cone string, e.g. "epi_qre", "hypo_qalpha:0.5", "op_persp_hypo:log:trace"')
    parser.add_argument("--n", type=int, default=2, help="Matrix size n")
    parser.add_argument("--m", type=int, default=None, help="Slack size m for op_persp_hypo")
    parser.add_argument("--kraus", type=Path, default=None, help="JSON file with a list of Kraus matrices")


def _parse_args(argv: list[str] | None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(description="Quantum relative entropy cones: solve, evaluate, certify")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="Solve a problem file")
    p_solve.add_argument("path", type=Path, help="Problem JSON file")
    p_solve.add_argument("--eps", type=float, default=None, help="Target gap bound nu/t")
    p_solve.add_argument("--mode", choices=SOLVE_MODES, default=None, help="Path-following schedule")
    p_solve.add_argument("--max-iter", type=int, default=None, help="Outer iteration cap")
    p_solve.add_argument("--trace", type=Path, default=None, help="Write the iteration trace as CSV")

    p_eval = sub.add_parser("eval", help="Evaluate a barrier at a point")
    _add_cone_args(p_eval)
    p_eval.add_argument("--point", type=Path, required=True, help="Point JSON file")
    p_eval.add_argument("--order", type=int, choices=(0, 1, 2), default=1, help="Derivative order to print")

    p_cert = sub.add_parser("certify", help="Run a sampled certification suite")
    p_cert.add_argument("--suite", choices=SUITES, required=True)
    _add_cone_args(p_cert, required=False)
    p_cert.add_argument("--seed", type=int, default=0)
    p_cert.add_argument("--samples", type=int, default=100)
    p_cert.add_argument("--tensor", action="store_true", help="compat: check the tensor-lifted map")
    p_cert.add_argument("--eps", type=float, default=1e-4, help="lb: direction parameter")

    p_lb = sub.add_parser("lb", help="Print a lower-bound certificate for the barrier parameter")
    _add_cone_args(p_lb)
    p_lb.add_argument("--eps", type=float, default=1e-4)

    p_bench = sub.add_parser("bench", help="Short-step iteration counts on the pinching family")
    p_bench.add_argument("--sizes", default="2,3,4,5", help="Comma-separated matrix sizes")
    p_bench.add_argument("--eps", type=float, default=1e-3)
    return parser.parse_args(argv)


def _cone(args: argparse.Namespace) -> Cone:
    params = None
    if args.kraus is not None:
        try:
            params = {"kraus": [matrix_from_json(K) for K in json.loads(args.kraus.read_text())]}
        except (json.JSONDecodeError, TypeError, ValueError) as exc:
            raise ProblemFormatError(f"bad Kraus file {args.kraus}: {exc}", key="kraus") from exc
    try:
        return parse_cone(args.cone, args.n, args.m, params)
    except ValueError as exc:
        raise ProblemFormatError(str(exc), key="cone") from exc


def cmd_solve(args: argparse.Namespace) -> int:
    problem = load_problem(args.path)
    options = problem.solver.with_overrides(max_iter=args.max_iter)
    result = solve(problem, eps=args.eps, mode=args.mode, options=options)
    print(f"problem: {problem.name or args.path.stem}")
    print(f"status: {result.status}")
    print(f"objective: {result.objective:.12g}")
    print(f"gap_bound: {result.gap_bound:.3e}")
    print(f"iterations: {result.iterations} newton_steps={result.newton_steps}")
    if problem.expected is not None and "objective" in problem.expected:
        print(f"expected: {float(problem.expected['objective']):.12g}")
    if result.message:
        print(f"message: {result.message}")
    if args.trace is not None:
        result.write_trace(args.trace)
    return STATUS_EXIT[result.status]


def cmd_eval(args: argparse.Namespace) -> int:
    cone = _cone(args)
    point = load_point(cone, args.point)
    ev = cone.barrier(point, order=args.order)
    print(f"cone: {cone.spec} n={cone.n} nu={cone.nu:g}")
    print(f"value: {ev.value:.15g}")
    if ev.grad is not None:
        print(f"grad: {json.dumps(ev.grad.tolist())}")
    if ev.hess is not None:
        print(f"hess: {json.dumps(ev.hess.tolist())}")
    return EXIT_OK


def _print_lb(cert: certify.LBCertificate) -> None:
    print(f"cone: {cert.cone}")
    print(f"bound: {cert.formula()}")
    print(f"tau_prime: {cert.tau_prime:.6g}")
    for name, ok in cert.premises.items():
        print(f"{'PASS' if ok else 'FAIL':4} {name}")


def cmd_certify(args: argparse.Namespace) -> int:
    if args.suite == "compat":
        report = certify.check_compat(args.n, args.samples, seed=args.seed, tensor=args.tensor)
    elif args.suite == "tensor":
        report = certify.check_tensor_identity(args.n, args.samples, seed=args.seed)
    else:
        if args.cone is None:
            raise ProblemFormatError(f"suite '{args.suite}' needs --cone", key="cone")
        cone = _cone(args)
        if args.suite == "lb":
            cert = certify.lb_certificate(cone, args.eps)
            _print_lb(cert)
            return EXIT_OK if cert.valid else EXIT_CERT_FAILED
        if args.suite == "sc" and isinstance(cone, PSDCone):
            report = certify.check_sc_logdet(cone.n, args.samples, seed=args.seed)
        elif args.suite == "sc":
            report = certify.check_sc(cone, args.samples, seed=args.seed)
        else:
            report = certify.check_nu(cone, args.samples, seed=args.seed)
    print(report.summary())
    print(json.dumps(report.to_dict()))
    return EXIT_OK if report.passed else EXIT_CERT_FAILED


def cmd_lb(args: argparse.Namespace) -> int:
    cert = certify.lb_certificate(_cone(args), args.eps)
    _print_lb(cert)
    return EXIT_OK if cert.valid else EXIT_CERT_FAILED


def cmd_bench(args: argparse.Namespace) -> int:
    try:
        sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    except ValueError as exc:
        raise ProblemFormatError(f"bad --sizes '{args.sizes}'", key="sizes") from exc
    rows, slope = iteration_law(sizes, args.eps)
    for row in rows:
        print(
            f"n={row.n} nu={row.nu:g} iterations={row.iterations} ceiling={row.ceiling} "
            f"sqrt(nu)log(nu/eps)={row.scale:.4f} error={row.error:.3e} status={row.status}"
        )
    print(f"log-log slope: {slope:.4f}")
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "eval": cmd_eval,
    "certify": cmd_certify,
    "lb": cmd_lb,
    "bench": cmd_bench,
}


def main(argv: list[str] | None = None) -> int:
    args = _parse_args(argv)
    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except InfeasiblePointError as exc:
        print(f"not interior: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (NumericalFailureError, MeasureError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ProblemFormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    raise SystemExit(main())
