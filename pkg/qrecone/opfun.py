from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import optimize, special

from .errors import ConcavityError, MeasureError
from .hermitian import IDENTITY, LOG, ScalarFn, power_fn

logger = logging.getLogger(__name__)

DEFAULT_NODES = 60
RESIDUAL_TOL = 1e-9
VALIDATED_RANGE = (1e-3, 1e3)
WIDEST_RANGE = (1e-12, 1e12)
GRID_POINTS = 50
OFFSET_SAMPLES = 64

CASES = {(True, True): "i", (False, True): "ii", (True, False): "iii", (False, False): "iv"}


@dataclass(frozen=True)
class QuadMeasure:
    """Positive discrete measure on [0, 1] standing in for the representing measure of g."""

    nodes: np.ndarray
    weights: np.ndarray
    validated_range: tuple[float, float] = VALIDATED_RANGE
    max_residual: float = 0.0

    def __post_init__(self) -> None:
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.shape != weights.shape or nodes.ndim != 1:
            raise ValueError("nodes and weights must be 1-D arrays of equal length")
        if nodes.size and (np.any(np.diff(nodes) < 0) or nodes[0] < 0.0 or nodes[-1] > 1.0):
            raise ValueError("quadrature nodes must be sorted inside [0, 1]")
        if np.any(weights <= 0.0):
            raise ValueError("quadrature weights must be strictly positive")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def empty(cls) -> "QuadMeasure":
        return cls(np.empty(0), np.empty(0))

    @classmethod
    def atoms(cls, points: list[tuple[float, float]]) -> "QuadMeasure":
        points = sorted(points)
        return cls(np.array([s for s, _ in points]), np.array([w for _, w in points]))

    @property
    def count(self) -> int:
        return int(self.nodes.size)

    @property
    def mass(self) -> float:
        return float(self.weights.sum())

    def reflected(self) -> "QuadMeasure":
        return replace(self, nodes=1.0 - self.nodes[::-1], weights=self.weights[::-1].copy())

    def combined(self, other: "QuadMeasure") -> "QuadMeasure":
        nodes = np.concatenate([self.nodes, other.nodes])
        weights = np.concatenate([self.weights, other.weights])
        order = np.argsort(nodes, kind="stable")
        return QuadMeasure(nodes[order], weights[order], self.validated_range)

    def covers(self, lo: float, hi: float) -> bool:
        return self.validated_range[0] <= lo and hi <= self.validated_range[1]

    def integrate(self, fn: Callable[[np.ndarray], np.ndarray]) -> float:
        return float(np.dot(self.weights, fn(self.nodes)))

    def represent(self, x: np.ndarray, g1: float, gp1: float) -> np.ndarray:
        """g1 + gp1 (x-1) - sum_k w_k (x-1)^2 / (1 + s_k (x-1))."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        d = x - 1.0
        if not self.count:
            return g1 + gp1 * d
        kernel = (d * d)[:, None] / (1.0 + np.outer(d, self.nodes))
        return g1 + gp1 * d - kernel @ self.weights


@dataclass(frozen=True)
class OpConcaveFn:
    name: str
    family: str
    param: float | None
    scalar: ScalarFn
    g1: float
    gp1: float
    g0: float
    gt0: float
    measure: QuadMeasure = field(repr=False, compare=False)

    @property
    def limit_class(self) -> tuple[bool, bool]:
        return bool(np.isfinite(self.g0)), bool(np.isfinite(self.gt0))

    def eval(self, x: np.ndarray) -> np.ndarray:
        return self.scalar.f(np.asarray(x, dtype=float))

    def deriv(self, x: np.ndarray) -> np.ndarray:
        return self.scalar.df(np.asarray(x, dtype=float))

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.eval(x)

    def perspective_value(self, lam: np.ndarray, mu: np.ndarray) -> np.ndarray:
        """Scalar perspective lam * g(mu / lam) extended to lam = 0 or mu = 0 by its limits."""
        lam, mu = np.broadcast_arrays(np.asarray(lam, dtype=float), np.asarray(mu, dtype=float))
        out = np.zeros(lam.shape)
        both = (lam > 0) & (mu > 0)
        out[both] = lam[both] * self.eval(mu[both] / lam[both])
        only_lam = (lam > 0) & ~(mu > 0)
        if np.any(only_lam):
            out[only_lam] = -np.inf if self.g0 == -np.inf else lam[only_lam] * self.g0
        only_mu = ~(lam > 0) & (mu > 0)
        if np.any(only_mu):
            out[only_mu] = -np.inf if self.gt0 == -np.inf else mu[only_mu] * self.gt0
        return out

    def measure_for(self, lo: float, hi: float) -> QuadMeasure:
        """A validated measure whose range covers [lo, hi], widened by whole decades when needed."""
        if self.measure.covers(lo, hi):
            return self.measure
        if self.family == "custom":
            raise MeasureError(
                f"argument range [{lo:.3e}, {hi:.3e}] is outside the validated range "
                f"{self.measure.validated_range} of custom function {self.name}"
            )
        base_lo, base_hi = self.measure.validated_range
        lo_exp = math.floor(math.log10(min(lo, base_lo)))
        hi_exp = math.ceil(math.log10(max(hi, base_hi)))
        if 10.0**lo_exp < WIDEST_RANGE[0] or 10.0**hi_exp > WIDEST_RANGE[1]:
            raise MeasureError(f"argument range [{lo:.3e}, {hi:.3e}] exceeds the widest supported range {WIDEST_RANGE}")
        return _widened_measure(self.name, lo_exp, hi_exp)


@lru_cache(maxsize=64)
def _widened_measure(name: str, lo_exp: int, hi_exp: int) -> QuadMeasure:
    g = catalog(name)
    span = (hi_exp - lo_exp) / 6.0
    nodes = max(DEFAULT_NODES, int(math.ceil(DEFAULT_NODES * span)))
    logger.info("widening quadrature for %s to [1e%d, 1e%d] with %d nodes", name, lo_exp, hi_exp, nodes)
    return build_measure(g, nodes, (10.0**lo_exp, 10.0**hi_exp))


def _log_density(c: float, p: float, u: np.ndarray, power: int) -> np.ndarray:
    # log of c e^{(p+1)u} / (1+e^u)^power
    return math.log(c) + (p + 1.0) * u - power * np.logaddexp(0.0, u)


def _trapezoid_rule(c: float, p: float, nodes: int, x_range: tuple[float, float], tol: float) -> QuadMeasure:
    """Offset trapezoid rule in u = log((1-s)/s) for the density c s^{1-p} (1-s)^p ds, p in (-1, 1)."""
    if nodes < 4:
        raise ValueError(f"need at least 4 quadrature nodes, got {nodes}")
    lo, hi = x_range
    budget = 1e-2 * tol
    k_left = max(abs(1.0 - lo) ** 3 / lo**2, abs(hi - 1.0) ** 3 / hi**2, 1.0)
    k_right = max(abs(1.0 - lo) ** 3, abs(hi - 1.0) ** 3, 1.0)
    u_left = math.log(budget * (p + 2.0) / (c * k_left)) / (p + 2.0)
    u_right = -math.log(budget * (3.0 - p) / (c * k_right)) / (3.0 - p)
    step = (u_right - u_left) / (nodes - 3)

    # the sums below run far enough that dropped terms are below 1e-20 relative
    u_min = math.log(1e-20) / (p + 1.0)
    u_max = -math.log(1e-20) / (1.0 - p)
    ks = np.arange(math.floor(min(u_min, u_left) / step) - 2, math.ceil(max(u_max, u_right) / step) + 3)
    first_moment = c * special.beta(1.0 - p, 1.0 + p)

    def moment_error(theta: float) -> float:
        u = (ks + theta) * step
        return float(step * np.exp(_log_density(c, p, u, 2)).sum() - first_moment)

    thetas = np.linspace(0.0, 1.0, OFFSET_SAMPLES + 1)
    errors = np.array([moment_error(t) for t in thetas[:-1]] + [0.0])
    errors[-1] = errors[0]
    theta = float(thetas[int(np.argmin(np.abs(errors[:-1])))])
    for i in range(OFFSET_SAMPLES):
        if errors[i] == 0.0:
            theta = float(thetas[i])
            break
        if errors[i] * errors[i + 1] < 0.0:
            theta = float(optimize.brentq(moment_error, thetas[i], thetas[i + 1], xtol=1e-15))
            break

    k0 = math.ceil(u_left / step - theta)
    k_last = k0 + nodes - 3
    u_all = (ks + theta) * step
    w_all = step * np.exp(_log_density(c, p, u_all, 3))
    left_lump = float(w_all[ks < k0].sum())
    right_lump = float(w_all[ks > k_last].sum())
    central = np.arange(k_last, k0 - 1, -1)
    u_central = (central + theta) * step
    s_central = special.expit(-u_central)
    w_central = step * np.exp(_log_density(c, p, u_central, 3))

    s = np.concatenate([[0.0], s_central, [1.0]])
    w = np.concatenate([[right_lump], w_central, [left_lump]])
    keep = w > 0.0
    logger.debug("trapezoid rule c=%.4g p=%.4g: step=%.4f offset=%.6f nodes=%d", c, p, step, theta, int(keep.sum()))
    return QuadMeasure(s[keep], w[keep], x_range)


def _power_density(p: float) -> tuple[float, float]:
    return abs(math.sin(p * math.pi)) / math.pi, p


def build_measure(
    g: OpConcaveFn, nodes: int = DEFAULT_NODES, x_range: tuple[float, float] = VALIDATED_RANGE, tol: float = RESIDUAL_TOL
) -> QuadMeasure:
    """Discretize the representing measure of a catalog function and validate it on x_range."""
    lo, hi = x_range
    inverted = (1.0 / hi, 1.0 / lo)
    family, p = g.family, g.param
    if family == "log":
        measure = _trapezoid_rule(1.0, 0.0, nodes, x_range, tol)
    elif family == "pow":
        measure = QuadMeasure.empty() if p == 1.0 else _trapezoid_rule(*_power_density(p), nodes, x_range, tol)
    elif family == "negpow":
        if p == -1.0:
            measure = QuadMeasure.atoms([(1.0, 1.0)])
        elif p == 2.0:
            measure = QuadMeasure.atoms([(0.0, 1.0)])
        elif p < 0.0:
            measure = _trapezoid_rule(*_power_density(p), nodes, x_range, tol)
        else:
            measure = _trapezoid_rule(*_power_density(1.0 - p), nodes, inverted, tol).reflected()
    elif family == "sym_negpow":
        measure = build_measure(catalog(_name("negpow", p)), nodes, x_range, tol).combined(
            build_measure(catalog(_name("negpow", 1.0 - p)), nodes, x_range, tol)
        )
    elif family == "transpose":
        base = catalog(g.name[len("transpose:") :])
        measure = build_measure(base, nodes, inverted, tol).reflected()
    else:
        raise MeasureError(f"no constructive measure for {g.name}; supply one explicitly")
    return validate_measure(g, replace(measure, validated_range=x_range), tol)


def validate_measure(g: OpConcaveFn, measure: QuadMeasure, tol: float = RESIDUAL_TOL) -> QuadMeasure:
    lo, hi = measure.validated_range
    grid = np.geomspace(lo, hi, GRID_POINTS)
    exact = g.eval(grid)
    residual = np.abs(exact - measure.represent(grid, g.g1, g.gp1)) / (1.0 + np.abs(exact))
    worst = float(residual.max())
    if not worst <= tol:
        raise MeasureError(
            f"measure for {g.name} misses tolerance {tol:.1e}: max residual {worst:.3e} "
            f"at x = {grid[int(np.argmax(residual))]:.4g} with {measure.count} nodes",
            max_residual=worst,
        )
    logger.debug("measure for %s: %d nodes, max residual %.2e on %s", g.name, measure.count, worst, measure.validated_range)
    return replace(measure, max_residual=worst)


def _name(family: str, p: float | None) -> str:
    return family if p is None else f"{family}:{p!r}"


def _negpow_scalar(p: float) -> ScalarFn:
    base = power_fn(p)
    return ScalarFn(f"-x^{p:g}", lambda x: -base.f(x), lambda x: -base.df(x), lambda x: -base.d2f(x))


def _transpose_scalar(g: ScalarFn) -> ScalarFn:
    return ScalarFn(
        f"x*{g.name}(1/x)",
        lambda x: x * g.f(1.0 / x),
        lambda x: g.f(1.0 / x) - g.df(1.0 / x) / x,
        lambda x: g.d2f(1.0 / x) / x**3,
    )


def _unbuilt(name: str, family: str, p: float | None, scalar: ScalarFn, g1: float, gp1: float, g0: float, gt0: float) -> OpConcaveFn:
    return OpConcaveFn(name, family, p, scalar, g1, gp1, g0, gt0, QuadMeasure.empty())


def _describe(family: str, p: float | None) -> OpConcaveFn:
    name = _name(family, p)
    if family == "log":
        return _unbuilt(name, family, None, LOG, 0.0, 1.0, -np.inf, 0.0)
    if family == "pow":
        if p is None or not 0.0 < p <= 1.0:
            raise ConcavityError(f"x^p is operator concave only for p in (0, 1], got pow:{p}")
        scalar = IDENTITY if p == 1.0 else power_fn(p)
        return _unbuilt(name, family, p, scalar, 1.0, p, 0.0, 1.0 if p == 1.0 else 0.0)
    if family == "negpow":
        if p is None or not (-1.0 <= p < 0.0 or 1.0 < p <= 2.0):
            raise ConcavityError(f"-x^p is operator concave only for p in [-1, 0) or (1, 2], got negpow:{p}")
        if p < 0.0:
            return _unbuilt(name, family, p, _negpow_scalar(p), -1.0, -p, -np.inf, 0.0)
        return _unbuilt(name, family, p, _negpow_scalar(p), -1.0, -p, 0.0, -np.inf)
    if family == "sym_negpow":
        if p is None or not 1.0 < p <= 2.0:
            raise ConcavityError(f"-x^a - x^(1-a) needs a in (1, 2], got sym_negpow:{p}")
        a, b = _negpow_scalar(p), _negpow_scalar(1.0 - p)
        scalar = ScalarFn(
            f"-x^{p:g}-x^{1.0 - p:g}",
            lambda x: a.f(x) + b.f(x),
            lambda x: a.df(x) + b.df(x),
            lambda x: a.d2f(x) + b.d2f(x),
        )
        return _unbuilt(name, family, p, scalar, -2.0, -1.0, -np.inf, -np.inf)
    raise ValueError(f"Unknown operator concave function '{name}'")


def _parse(spec: str) -> tuple[str, float | None]:
    family, _, arg = spec.strip().partition(":")
    if not arg:
        return family, None
    try:
        return family, float(arg)
    except ValueError as exc:
        raise ValueError(f"Bad parameter '{arg}' in function spec '{spec}'") from exc


def one_minus_alpha_pow(alpha: float) -> OpConcaveFn:
    """x^(1-a) for a in [0, 1), -x^(1-a) for a in [-1, 0) or (1, 2]."""
    q = 1.0 - alpha
    if 0.0 < q <= 1.0:
        return catalog(_name("pow", q))
    if -1.0 <= q < 0.0 or 1.0 < q <= 2.0:
        return catalog(_name("negpow", q))
    raise ConcavityError(f"no operator concave x^(1-a) form for a = {alpha}")


@lru_cache(maxsize=None)
def catalog(name: str, param: float | None = None) -> OpConcaveFn:
    """Catalog entry by spec string ("log", "pow:0.5", "negpow:2", "one_minus_alpha_pow:0.3", "transpose:log")."""
    if param is not None:
        name = _name(name, param)
    if name.startswith("transpose:"):
        return transpose_fn(catalog(name[len("transpose:") :]))
    family, p = _parse(name)
    if family == "one_minus_alpha_pow":
        if p is None:
            raise ValueError("one_minus_alpha_pow needs a parameter")
        return one_minus_alpha_pow(p)
    g = _describe(family, p)
    return replace(g, measure=build_measure(g))


def transpose_fn(g: OpConcaveFn) -> OpConcaveFn:
    if g.family == "transpose":
        return catalog(g.name[len("transpose:") :])
    if g.family == "custom":
        raise ValueError(f"custom function {g.name} has no transpose measure; build one with custom_fn")
    t = OpConcaveFn(
        name=f"transpose:{g.name}",
        family="transpose",
        param=g.param,
        scalar=_transpose_scalar(g.scalar),
        g1=g.g1,
        gp1=g.g1 - g.gp1,
        g0=g.gt0,
        gt0=g.g0,
        measure=QuadMeasure.empty(),
    )
    return replace(t, measure=validate_measure(t, replace(g.measure.reflected(), validated_range=_invert(g.measure.validated_range))))


def _invert(x_range: tuple[float, float]) -> tuple[float, float]:
    return 1.0 / x_range[1], 1.0 / x_range[0]


def custom_fn(
    name: str,
    scalar: ScalarFn,
    g1: float,
    gp1: float,
    limits: tuple[float, float],
    measure: QuadMeasure,
    tol: float = RESIDUAL_TOL,
) -> OpConcaveFn:
    """User-supplied g: runs the midpoint concavity spot check and validates the given measure."""
    grid = np.geomspace(1e-3, 1e3, 25)
    x, y = np.meshgrid(grid, grid)
    mid = scalar.f(0.5 * (x + y))
    chord = 0.5 * (scalar.f(x) + scalar.f(y))
    if np.any(mid < chord - 1e-12 * (1.0 + np.abs(chord))):
        raise ConcavityError(f"{name} fails the midpoint concavity spot check")
    g = OpConcaveFn(name, "custom", None, scalar, g1, gp1, limits[0], limits[1], QuadMeasure.empty())
    return replace(g, measure=validate_measure(g, measure, tol))


def domain_case(g: OpConcaveFn) -> str:
    return CASES[g.limit_class]
