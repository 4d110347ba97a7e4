"""Pinching problems: min z s.t. (X0, Y, z) in EpiQRE, Y diagonal with unit trace.

The optimum is z* = tr(X0 log X0) - sum_i d_i log d_i with d = diag(X0), attained at Y = diag(d).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .barriers import ConePoint, EpiQRE
from .hermitian import LOG, apply_fn, hvec, spectral, symmetrize
from .ipm import ProblemSpec, SolverOptions, short_step_ceiling, solve

logger = logging.getLogger(__name__)


def pinching_state(n: int) -> np.ndarray:
    """A fixed unit-trace density with complex off-diagonal entries: (I/n + v v*) / 2."""
    k = np.arange(n)
    v = (k + 1.0) * np.exp(2j * np.pi * k / (n + 1))
    v = v / np.linalg.norm(v)
    return symmetrize(0.5 * np.eye(n) / n + 0.5 * np.outer(v, v.conj()))


def pinching_optimum(X0: np.ndarray) -> float:
    d = np.real(np.diag(X0))
    entropy_term = float(np.real(np.trace(X0 @ apply_fn(spectral(X0), LOG))))
    return entropy_term - float(np.sum(d * np.log(d)))


def pinching_problem(X0: np.ndarray, name: str = "", solver: SolverOptions | None = None) -> ProblemSpec:
    n = X0.shape[0]
    cone = EpiQRE(n)
    k = n * n
    rows: list[np.ndarray] = []
    rhs: list[float] = []
    x_target = hvec(X0)
    for a in range(k):
        row = np.zeros(cone.dim)
        row[a] = 1.0
        rows.append(row)
        rhs.append(float(x_target[a]))
    for a in range(n, k):
        row = np.zeros(cone.dim)
        row[k + a] = 1.0
        rows.append(row)
        rhs.append(0.0)
    row = np.zeros(cone.dim)
    row[k : k + n] = 1.0
    rows.append(row)
    rhs.append(1.0)
    c = np.zeros(cone.dim)
    c[-1] = 1.0
    Y = np.eye(n, dtype=complex) / n
    z = float(np.real(np.trace(X0 @ (apply_fn(spectral(X0), LOG) - apply_fn(spectral(Y), LOG))))) + 1.0
    return ProblemSpec(
        cones=[cone],
        A=np.array(rows),
        b=np.array(rhs),
        c=c,
        start=[ConePoint(X0, Y, z)],
        name=name or f"pinch_n{n}",
        solver=solver or SolverOptions(),
        expected={"objective": pinching_optimum(X0), "tolerance": 1e-6, "provenance": "pinching closed form"},
    )


@dataclass(frozen=True)
class LawRow:
    n: int
    nu: float
    iterations: int
    ceiling: int
    scale: float
    objective: float
    error: float
    status: str


def iteration_law(sizes: list[int], eps: float, max_iter: int | None = None) -> tuple[list[LawRow], float]:
    """Short-step solves of the pinching family; returns per-size rows and the log-log slope of
    iterations against sqrt(nu) log(nu / eps)."""
    rows = []
    for n in sizes:
        X0 = pinching_state(n)
        nu = 2.0 * n + 1.0
        ceiling = short_step_ceiling(nu, eps)
        options = SolverOptions(eps=eps, mode="short-step", max_iter=max_iter or ceiling + 10)
        result = solve(pinching_problem(X0, solver=options))
        rows.append(
            LawRow(
                n=n,
                nu=nu,
                iterations=result.iterations,
                ceiling=ceiling,
                scale=math.sqrt(nu) * math.log(nu / eps),
                objective=result.objective,
                error=abs(result.objective - pinching_optimum(X0)),
                status=result.status,
            )
        )
        logger.info("pinching n=%d: %d iterations (ceiling %d)", n, result.iterations, ceiling)
    slope = float("nan")
    if len(rows) >= 2:
        slope = float(np.polyfit(np.log([r.scale for r in rows]), np.log([r.iterations for r in rows]), 1)[0])
    return rows, slope
