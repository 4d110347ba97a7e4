#!/usr/bin/env python3
from __future__ import annotations

import argparse
import logging
import math
from dataclasses import dataclass
from pathlib import Path

from qrecone.errors import ProblemFormatError
from qrecone.ipm import OPTIMAL, SOLVE_MODES, solve
from qrecone.problem import load_problem

DEFAULT_TOLERANCE = 1e-6


@dataclass
class ProblemResult:
    path: Path
    status: str
    objective: float
    expected: float | None
    tolerance: float
    iterations: int
    message: str

    @property
    def error(self) -> float:
        if self.expected is None:
            return math.nan
        return abs(self.objective - self.expected)

    @property
    def passed(self) -> bool:
        if self.status != OPTIMAL:
            return False
        if self.expected is None:
            return True
        return self.error <= self.tolerance * max(1.0, abs(self.expected))


def run_problem(path: Path, eps: float | None = None, mode: str | None = None) -> ProblemResult:
    try:
        problem = load_problem(path)
        result = solve(problem, eps=eps, mode=mode)
    except (ProblemFormatError, ValueError) as exc:
        return ProblemResult(path, "ParseError", math.nan, None, 0.0, 0, str(exc))
    expected = problem.expected or {}
    target = expected.get("objective")
    return ProblemResult(
        path=path,
        status=result.status,
        objective=result.objective,
        expected=None if target is None else float(target),
        tolerance=float(expected.get("tolerance", DEFAULT_TOLERANCE)),
        iterations=result.iterations,
        message=result.message,
    )


def _iter_problem_files(path: Path) -> list[Path]:
    if path.is_file():
        return [path]
    return sorted(p for p in path.rglob("*.json") if p.is_file())


def main() -> int:
    parser = argparse.ArgumentParser(description="Solve every problem file and compare with its recorded optimum")
    parser.add_argument("path", type=Path, nargs="?", default=Path("problems"), help="Problem file or directory")
    parser.add_argument("--eps", type=float, default=None, help="Override the target gap bound")
    parser.add_argument("--mode", choices=SOLVE_MODES, default=None, help="Override the path-following schedule")
    parser.add_argument("-v", "--verbose", action="store_true", help="Log solver iterations")
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)

    files = _iter_problem_files(args.path)
    if not files:
        print(f"No problem files found under {args.path}")
        return 1

    failed = 0
    for path in files:
        result = run_problem(path, args.eps, args.mode)
        status = "PASS" if result.passed else "FAIL"
        print(
            f"{status:4} [{result.status}] {path} "
            f"objective={result.objective:.10g} error={result.error:.2e} iter={result.iterations}"
        )
        if result.message and not result.passed:
            print(result.message)
        if not result.passed:
            failed += 1
    return 1 if failed else 0


if __name__ == "__main__":
    raise SystemExit(main())
