from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np
import scipy.linalg

from .barriers import Cone, ConePoint, block_offsets
from .errors import DomainError, InfeasiblePointError, MeasureError, NumericalFailureError

logger = logging.getLogger(__name__)

OPTIMAL = "Optimal"
INFEASIBLE_START = "Infeasible-start"
ITER_LIMIT = "IterLimit"
NUMERICAL_FAILURE = "NumericalFailure"
STATUSES = (OPTIMAL, INFEASIBLE_START, ITER_LIMIT, NUMERICAL_FAILURE)

SOLVE_MODES = ("short-step", "long-step")
RANK_TOL = 1e-10
FEASIBILITY_RTOL = 1e-8
MIN_STEP = 1e-12
TRACE_COLUMNS = ("iter", "t", "decrement", "objective", "gap_bound")


@dataclass(frozen=True)
class SolverOptions:
    eps: float = 1e-7
    mode: str = "long-step"
    max_iter: int = 500
    long_step_factor: float = 10.0
    center_tol: float = 0.25
    final_center_tol: float = 1e-6
    max_newton: int = 100
    t0: float = 1.0

    def __post_init__(self) -> None:
        if self.mode not in SOLVE_MODES:
            raise ValueError(f"Unknown solve mode '{self.mode}'. Expected one of {SOLVE_MODES}")
        if not self.eps > 0.0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if self.max_iter < 1 or self.max_newton < 1:
            raise ValueError("max_iter and max_newton must be at least 1")
        if not self.long_step_factor > 1.0:
            raise ValueError(f"long_step_factor must exceed 1, got {self.long_step_factor}")
        if not 0.0 < self.center_tol < 1.0 or not 0.0 < self.final_center_tol < 1.0:
            raise ValueError("centering tolerances must lie in (0, 1)")
        if not self.t0 > 0.0:
            raise ValueError(f"t0 must be positive, got {self.t0}")

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "SolverOptions":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - set(known))
        if unknown:
            raise KeyError(unknown[0])
        kwargs: dict[str, Any] = {}
        for key, value in data.items():
            if key == "mode":
                kwargs[key] = str(value)
            elif key in ("max_iter", "max_newton"):
                kwargs[key] = int(value)
            else:
                kwargs[key] = float(value)
        return cls(**kwargs)

    def to_mapping(self) -> dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def with_overrides(self, **overrides: Any) -> "SolverOptions":
        changes = {key: value for key, value in overrides.items() if value is not None}
        return replace(self, **changes) if changes else self


@dataclass
class ProblemSpec:
    """min <c, x> s.t. A x = b, x in K_1 x ... x K_p, blocks concatenated in cone order."""

    cones: list[Cone]
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    start: list[ConePoint] | None = None
    name: str = ""
    description: str = ""
    solver: SolverOptions = field(default_factory=SolverOptions)
    expected: dict[str, Any] | None = None

    def __post_init__(self) -> None:
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        self.c = np.asarray(self.c, dtype=float).reshape(-1)
        if not self.cones:
            raise ValueError("a problem needs at least one cone")
        if self.c.shape != (self.dim,):
            raise ValueError(f"c has {self.c.size} entries, cones have {self.dim} coordinates")
        if self.A.shape != (self.b.size, self.dim):
            raise ValueError(f"A has shape {self.A.shape}, expected ({self.b.size}, {self.dim})")
        if self.start is not None and len(self.start) != len(self.cones):
            raise ValueError(f"start has {len(self.start)} blocks, problem has {len(self.cones)} cones")

    @property
    def offsets(self) -> list[int]:
        return block_offsets(self.cones)

    @property
    def dim(self) -> int:
        return sum(cone.dim for cone in self.cones)

    @property
    def nu(self) -> float:
        return float(sum(cone.nu for cone in self.cones))

    def split(self, x: np.ndarray) -> list[np.ndarray]:
        offsets = self.offsets
        return [x[lo:hi] for lo, hi in zip(offsets[:-1], offsets[1:])]

    def points(self, x: np.ndarray) -> list[ConePoint]:
        return [cone.from_vector(v) for cone, v in zip(self.cones, self.split(x))]

    def start_vector(self) -> np.ndarray:
        points = self.start if self.start is not None else [cone.feasible_start() for cone in self.cones]
        return np.concatenate([cone.to_vector(pt) for cone, pt in zip(self.cones, points)])

    def row_rank(self) -> int:
        if self.A.shape[0] == 0:
            return 0
        R = scipy.linalg.qr(self.A.T, mode="r", pivoting=True)[0]
        diag = np.abs(np.diag(R))
        if diag.size == 0 or diag[0] == 0.0:
            return 0
        return int(np.sum(diag > RANK_TOL * diag[0]))

    def check_rank(self) -> None:
        rank = self.row_rank()
        if rank < self.A.shape[0]:
            raise ValueError(f"A must have full row rank: rank {rank} < {self.A.shape[0]} rows")

    def residual(self, x: np.ndarray) -> float:
        return float(np.linalg.norm(self.A @ x - self.b))


@dataclass(frozen=True)
class IterRecord:
    iter: int
    t: float
    decrement: float
    objective: float
    gap_bound: float


@dataclass
class SolveResult:
    status: str
    x: np.ndarray
    objective: float
    t: float
    gap_bound: float
    trace: list[IterRecord] = field(default_factory=list)
    message: str = ""
    newton_steps: int = 0

    @property
    def iterations(self) -> int:
        return self.trace[-1].iter if self.trace else 0

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL

    def write_trace(self, path: Path) -> None:
        with Path(path).open("w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(TRACE_COLUMNS)
            for rec in self.trace:
                writer.writerow([rec.iter, f"{rec.t:.17g}", f"{rec.decrement:.17g}", f"{rec.objective:.17g}", f"{rec.gap_bound:.17g}"])


def product_barrier(cones: Sequence[Cone], x: np.ndarray, order: int = 2) -> tuple[float, np.ndarray | None, np.ndarray | None]:
    """Barrier of the product cone; raises InfeasiblePointError naming the failing block."""
    offsets = block_offsets(cones)
    value = 0.0
    grad = np.zeros(offsets[-1]) if order >= 1 else None
    hess = np.zeros((offsets[-1], offsets[-1])) if order >= 2 else None
    for index, (cone, lo, hi) in enumerate(zip(cones, offsets[:-1], offsets[1:])):
        ev = cone.barrier(x[lo:hi], order, block=index)
        value += ev.value
        if grad is not None:
            grad[lo:hi] = ev.grad
        if hess is not None:
            hess[lo:hi, lo:hi] = ev.hess
    return value, grad, hess


def _interior(cones: Sequence[Cone], x: np.ndarray) -> bool:
    try:
        product_barrier(cones, x, order=0)
    except (InfeasiblePointError, MeasureError, DomainError):
        return False
    return True


def _newton_direction(problem: ProblemSpec, x: np.ndarray, t: float) -> tuple[np.ndarray, float]:
    _, grad, hess = product_barrier(problem.cones, x, 2)
    p = problem.A.shape[0]
    kkt = np.block([[hess, problem.A.T], [problem.A, np.zeros((p, p))]])
    rhs = np.concatenate([-(t * problem.c + grad), problem.b - problem.A @ x])
    try:
        sol = scipy.linalg.solve(kkt, rhs, assume_a="sym")
    except (np.linalg.LinAlgError, ValueError) as exc:
        cond = np.linalg.cond(hess)
        raise NumericalFailureError(f"KKT factorization failed (Hessian condition number {cond:.3e}): {exc}") from exc
    dx = sol[: problem.dim]
    if not np.all(np.isfinite(dx)):
        raise NumericalFailureError(f"non-finite Newton direction (Hessian condition number {np.linalg.cond(hess):.3e})")
    decrement = math.sqrt(max(float(dx @ hess @ dx), 0.0))
    return dx, decrement


def _damped_update(problem: ProblemSpec, x: np.ndarray, dx: np.ndarray, decrement: float) -> np.ndarray:
    step = 1.0 / (1.0 + decrement) if decrement > 0.25 else 1.0
    while not _interior(problem.cones, x + step * dx):
        step *= 0.5
        logger.debug("backtracking: step %.3e", step)
        if step < MIN_STEP:
            raise NumericalFailureError(f"line search cannot stay interior (decrement {decrement:.3e})")
    logger.debug("newton step: decrement %.6e, step %.3e", decrement, step)
    return x + step * dx


def newton_step(problem: ProblemSpec, x: np.ndarray, t: float) -> tuple[np.ndarray, float]:
    """One damped Newton step for t<c,x> + F(x) on Ax = b; step 1/(1+delta) while delta > 1/4, halved until interior."""
    dx, decrement = _newton_direction(problem, x, t)
    return _damped_update(problem, x, dx, decrement), decrement


def newton_center(
    problem: ProblemSpec, x: np.ndarray, t: float, tol_decrement: float = 0.25, max_newton: int = 100
) -> tuple[np.ndarray, float, int]:
    """Damped Newton until the decrement at the returned point is at most tol_decrement."""
    for steps in range(max_newton + 1):
        dx, decrement = _newton_direction(problem, x, t)
        if decrement <= tol_decrement:
            return x, decrement, steps
        if steps == max_newton:
            break
        x = _damped_update(problem, x, dx, decrement)
    raise NumericalFailureError(f"centering did not reach decrement {tol_decrement} in {max_newton} Newton steps")


def short_step_factor(nu: float) -> float:
    return 1.0 + 1.0 / (16.0 * math.sqrt(nu))


def short_step_ceiling(nu: float, eps: float, t0: float = 1.0) -> int:
    """Outer iterations the short-step schedule needs to bring nu / t below eps."""
    return math.ceil(math.log(nu / (eps * t0)) / math.log(short_step_factor(nu))) + 1


def solve(
    problem: ProblemSpec,
    eps: float | None = None,
    mode: str | None = None,
    options: SolverOptions | None = None,
) -> SolveResult:
    opts = (options or problem.solver).with_overrides(eps=eps, mode=mode)
    problem.check_rank()
    nu = problem.nu
    x = problem.start_vector()
    t = opts.t0

    def result(status: str, message: str = "") -> SolveResult:
        objective = float(problem.c @ x)
        return SolveResult(status, x, objective, t, nu / t, trace, message, newton_total)

    trace: list[IterRecord] = []
    newton_total = 0
    try:
        product_barrier(problem.cones, x, 0)
    except (InfeasiblePointError, MeasureError, DomainError) as exc:
        return result(INFEASIBLE_START, str(exc))
    if problem.residual(x) > FEASIBILITY_RTOL * (1.0 + float(np.linalg.norm(problem.b))):
        return result(INFEASIBLE_START, f"start violates Ax = b (residual {problem.residual(x):.3e})")

    try:
        x, decrement, steps = newton_center(problem, x, t, opts.center_tol, opts.max_newton)
        newton_total += steps
        trace.append(IterRecord(0, t, decrement, float(problem.c @ x), nu / t))
        factor = short_step_factor(nu) if opts.mode == "short-step" else opts.long_step_factor
        for it in range(1, opts.max_iter + 1):
            if nu / t <= opts.eps:
                break
            t *= factor
            if opts.mode == "short-step":
                x, decrement = newton_step(problem, x, t)
                steps = 1
            else:
                x, decrement, steps = newton_center(problem, x, t, opts.center_tol, opts.max_newton)
            newton_total += steps
            rec = IterRecord(it, t, decrement, float(problem.c @ x), nu / t)
            trace.append(rec)
            logger.info(
                "iter %d: t=%.6e decrement=%.3e objective=%.12g gap<=%.3e", it, rec.t, rec.decrement, rec.objective, rec.gap_bound
            )
        if nu / t > opts.eps:
            return result(ITER_LIMIT, f"gap bound {nu / t:.3e} above eps {opts.eps:g} after {opts.max_iter} iterations")
        x, _, steps = newton_center(problem, x, t, opts.final_center_tol, opts.max_newton)
        newton_total += steps
    except (NumericalFailureError, MeasureError, DomainError) as exc:
        logger.warning("numerical failure: %s", exc)
        return result(NUMERICAL_FAILURE, str(exc))
    drift = problem.residual(x)
    if drift > FEASIBILITY_RTOL * (1.0 + float(np.linalg.norm(problem.b))):
        logger.warning("final iterate violates Ax = b by %.3e", drift)
        return result(NUMERICAL_FAILURE, f"final iterate violates Ax = b (residual {drift:.3e})")
    return result(OPTIMAL)
