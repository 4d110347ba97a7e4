from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, ClassVar, Mapping, Sequence

import numpy as np
import scipy.linalg

from .errors import ConcavityError, InfeasiblePointError
from .hermitian import (
    cholesky,
    congruence_stack,
    hermitian,
    hmat,
    hvec,
    hvec_basis,
    hvec_batch,
    inv_pd,
    kernel_contained,
    logdet,
    logdet_hessian,
    require_pd,
    sqrt_psd,
    symmetrize,
)
from .opfun import OpConcaveFn, catalog, domain_case, one_minus_alpha_pow
from .perspective import (
    QuadraturePerspective,
    SpectralDivergence,
    boundary_persp,
    boundary_trace_value,
    scalar_x_directions,
    xy_directions,
)

logger = logging.getLogger(__name__)

CLOSURE_TOL = 1e-9
MAP_VARIANTS = ("trace", "identity", "kraus")
KRAUS_PD_TOL = 1e-12


@dataclass(frozen=True)
class ConePoint:
    """(X, Y, slack) with X a scalar for the trace perspective and only X for the PSD cone."""

    X: np.ndarray | float
    Y: np.ndarray | None = None
    Z: np.ndarray | float | None = None


@dataclass(frozen=True)
class BarrierEval:
    value: float
    grad: np.ndarray | None = None
    hess: np.ndarray | None = None


def _psd_ok(X: np.ndarray, tol: float) -> bool:
    lam = scipy.linalg.eigvalsh(X)
    return bool(lam[0] >= -tol * max(1.0, abs(lam[-1])))


def _scale(*items: np.ndarray | float) -> float:
    values = [1.0]
    for item in items:
        if np.ndim(item) == 2:
            values.append(float(np.max(np.abs(scipy.linalg.eigvalsh(item)))))
        else:
            values.append(abs(float(item)))
    return max(values)


def _domain_ok(g: OpConcaveFn, X: np.ndarray, Y: np.ndarray, tol: float) -> bool:
    case = domain_case(g)
    if case in ("ii", "iv") and not kernel_contained(X, Y, tol):
        return False
    if case in ("iii", "iv") and not kernel_contained(Y, X, tol):
        return False
    return True


def _check_pd(X: np.ndarray, component: str, block: int | None) -> None:
    try:
        require_pd(X, component)
    except InfeasiblePointError as exc:
        if block is None:
            raise
        raise exc.in_block(block) from exc


@dataclass(frozen=True)
class Cone:
    """Base cone: coordinates, barrier oracle, interior and closure tests.

    Coordinates are hvec(X), then hvec(Y), then the slack, matching the problem file layout.
    """

    n: int
    kind: ClassVar[str] = ""

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"cone dimension must be positive, got {self.n}")

    @property
    def spec(self) -> str:
        return self.kind

    @property
    def m(self) -> int:
        return 1

    @property
    def dim(self) -> int:
        raise NotImplementedError

    @property
    def nu(self) -> float:
        raise NotImplementedError

    def to_vector(self, pt: ConePoint) -> np.ndarray:
        raise NotImplementedError

    def from_vector(self, v: np.ndarray) -> ConePoint:
        raise NotImplementedError

    def barrier(self, pt: ConePoint | np.ndarray, order: int = 2, block: int | None = None) -> BarrierEval:
        raise NotImplementedError

    def closure_member(self, pt: ConePoint | np.ndarray, tol: float = CLOSURE_TOL) -> bool:
        raise NotImplementedError

    def feasible_start(self) -> ConePoint:
        raise NotImplementedError

    def interior(self, pt: ConePoint | np.ndarray) -> bool:
        try:
            self.barrier(pt, order=0)
        except InfeasiblePointError:
            return False
        return True

    def _point(self, pt: ConePoint | np.ndarray) -> ConePoint:
        if isinstance(pt, ConePoint):
            return pt
        v = np.asarray(pt, dtype=float)
        if v.shape != (self.dim,):
            raise ValueError(f"{self.spec} expects {self.dim} coordinates, got shape {v.shape}")
        return self.from_vector(v)

    def _check_order(self, order: int) -> None:
        if order not in (0, 1, 2):
            raise ValueError(f"barrier order must be 0, 1 or 2, got {order}")

    # Diagonal restriction used by the lower-bound certificate: h maps R^N_{++} to the slack space.
    @property
    def lb_dims(self) -> tuple[int, int]:
        raise ValueError(f"{self.spec} has no hypograph form for a lower-bound certificate")

    def lb_map(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def lb_point(self, x: np.ndarray, z_h: np.ndarray) -> ConePoint:
        raise NotImplementedError


@dataclass(frozen=True)
class PSDCone(Cone):
    kind: ClassVar[str] = "psd"

    @property
    def dim(self) -> int:
        return self.n * self.n

    @property
    def nu(self) -> float:
        return float(self.n)

    def to_vector(self, pt: ConePoint) -> np.ndarray:
        return hvec(hermitian(pt.X, "X"))

    def from_vector(self, v: np.ndarray) -> ConePoint:
        return ConePoint(hmat(v, self.n))

    def barrier(self, pt: ConePoint | np.ndarray, order: int = 2, block: int | None = None) -> BarrierEval:
        self._check_order(order)
        X = hermitian(self._point(pt).X, "X")
        _check_pd(X, "X", block)
        value = -logdet(X)
        if order == 0:
            return BarrierEval(value)
        grad = -hvec(inv_pd(X))
        if order == 1:
            return BarrierEval(value, grad)
        return BarrierEval(value, grad, logdet_hessian(X))

    def closure_member(self, pt: ConePoint | np.ndarray, tol: float = CLOSURE_TOL) -> bool:
        return _psd_ok(hermitian(self._point(pt).X, "X"), tol)

    def feasible_start(self) -> ConePoint:
        return ConePoint(np.eye(self.n, dtype=complex))


@dataclass(frozen=True)
class ScalarSlackCone(Cone):
    """{(X, Y, z) : sigma z + h(X, Y) >= 0} with h concave and 1-homogeneous.

    Barrier -log(sigma z + h) - logdet X - logdet Y, parameter 2n + 1.
    """

    sigma: ClassVar[float] = 1.0
    route: ClassVar[str] = "spectral"

    @property
    def g(self) -> OpConcaveFn:
        raise NotImplementedError

    @property
    def dim(self) -> int:
        return 2 * self.n * self.n + 1

    @property
    def nu(self) -> float:
        return 2.0 * self.n + 1.0

    def to_vector(self, pt: ConePoint) -> np.ndarray:
        return np.concatenate([hvec(hermitian(pt.X, "X")), hvec(hermitian(pt.Y, "Y")), [float(pt.Z)]])

    def from_vector(self, v: np.ndarray) -> ConePoint:
        k = self.n * self.n
        return ConePoint(hmat(v[:k], self.n), hmat(v[k : 2 * k], self.n), float(v[-1]))

    def _unpack(self, pt: ConePoint | np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
        pt = self._point(pt)
        X, Y = hermitian(pt.X, "X"), hermitian(pt.Y, "Y")
        if X.shape != (self.n, self.n) or Y.shape != (self.n, self.n):
            raise ValueError(f"{self.spec} expects {self.n}x{self.n} X and Y, got {X.shape} and {Y.shape}")
        if np.ndim(pt.Z) != 0:
            raise ValueError(f"{self.spec} expects a scalar slack z")
        return X, Y, float(pt.Z)

    def h_oracle(self, X: np.ndarray, Y: np.ndarray, order: int) -> tuple[float, np.ndarray | None, np.ndarray | None]:
        """Value, gradient and Hessian of h in (hvec X, hvec Y) coordinates."""
        if self.route == "spectral":
            div = self._spectral(X, Y)
            sign = self._spectral_sign
            grad = sign * div.gradient() if order >= 1 else None
            hess = sign * div.hessian() if order >= 2 else None
            return sign * div.value, grad, hess
        oracle = QuadraturePerspective(self.g, X, Y)
        value = float(np.real(np.trace(oracle.value)))
        if order == 0:
            return value, None, None
        Hs, Vs = xy_directions(self.n)
        grad = np.real(np.trace(oracle.first_derivatives(Hs, Vs), axis1=-2, axis2=-1))
        hess = oracle.hessian_form(Hs, Vs) if order >= 2 else None
        return value, grad, hess

    def _spectral(self, X: np.ndarray, Y: np.ndarray) -> SpectralDivergence:
        raise NotImplementedError

    @property
    def _spectral_sign(self) -> float:
        return 1.0

    def barrier(self, pt: ConePoint | np.ndarray, order: int = 2, block: int | None = None) -> BarrierEval:
        self._check_order(order)
        X, Y, z = self._unpack(pt)
        _check_pd(X, "X", block)
        _check_pd(Y, "Y", block)
        h, h_grad, h_hess = self.h_oracle(X, Y, order)
        u = self.sigma * z + h
        if not (u > 0.0 and math.isfinite(u)):
            raise InfeasiblePointError("slack", f"sigma z + h = {u:.3e}", block)
        value = -math.log(u) - logdet(X) - logdet(Y)
        if order == 0:
            return BarrierEval(value)
        k = self.n * self.n
        grad_u = np.concatenate([h_grad, [self.sigma]])
        inv_x, inv_y = inv_pd(X), inv_pd(Y)
        grad = -grad_u / u
        grad[:k] -= hvec(inv_x)
        grad[k : 2 * k] -= hvec(inv_y)
        if order == 1:
            return BarrierEval(value, grad)
        hess = np.outer(grad_u, grad_u) / (u * u)
        hess[: 2 * k, : 2 * k] -= h_hess / u
        hess[:k, :k] += logdet_hessian(X)
        hess[k : 2 * k, k : 2 * k] += logdet_hessian(Y)
        return BarrierEval(value, grad, 0.5 * (hess + hess.T))

    def boundary_h(self, X: np.ndarray, Y: np.ndarray, tol: float) -> float:
        if self.route == "spectral":
            return boundary_trace_value(self.g, X, Y, tol)
        P = boundary_persp(self.g, X, Y, tol)
        if np.any(np.isneginf(P.real)):
            return -np.inf
        return float(np.real(np.trace(P)))

    def closure_member(self, pt: ConePoint | np.ndarray, tol: float = CLOSURE_TOL) -> bool:
        X, Y, z = self._unpack(pt)
        if not (_psd_ok(X, tol) and _psd_ok(Y, tol)):
            return False
        if not _domain_ok(self.g, X, Y, tol):
            return False
        h = self.boundary_h(X, Y, tol)
        if not math.isfinite(h):
            return False
        return self.sigma * z + h >= -10.0 * tol * _scale(X, Y, z)

    def feasible_start(self) -> ConePoint:
        eye = np.eye(self.n, dtype=complex)
        h0 = self.n * self.g.g1
        return ConePoint(eye, eye.copy(), self.sigma * (1.0 - h0))

    @property
    def lb_dims(self) -> tuple[int, int]:
        return 2 * self.n, 1

    def lb_map(self, x: np.ndarray) -> np.ndarray:
        X, Y = np.diag(x[: self.n]).astype(complex), np.diag(x[self.n :]).astype(complex)
        return np.array([[self.boundary_h(X, Y, 0.0)]])

    def lb_point(self, x: np.ndarray, z_h: np.ndarray) -> ConePoint:
        X, Y = np.diag(x[: self.n]).astype(complex), np.diag(x[self.n :]).astype(complex)
        return ConePoint(X, Y, -self.sigma * float(np.real(np.asarray(z_h).reshape(-1)[0])))


def _check_alpha(kind: str, alpha: float, concave: bool) -> None:
    ok = 0.0 < alpha < 1.0 if concave else (-1.0 <= alpha < 0.0 or 1.0 < alpha <= 2.0)
    if not ok:
        expected = "(0, 1)" if concave else "[-1, 0) or (1, 2]"
        raise ConcavityError(f"{kind} needs alpha in {expected}, got {alpha}")


@dataclass(frozen=True)
class EpiQRE(ScalarSlackCone):
    kind: ClassVar[str] = "epi_qre"

    @property
    def g(self) -> OpConcaveFn:
        return catalog("log")

    def _spectral(self, X: np.ndarray, Y: np.ndarray) -> SpectralDivergence:
        return SpectralDivergence("qre", X, Y)

    @property
    def _spectral_sign(self) -> float:
        return -1.0


@dataclass(frozen=True)
class _PetzCone(ScalarSlackCone):
    alpha: float = 0.5
    concave: ClassVar[bool] = True

    def __post_init__(self) -> None:
        super().__post_init__()
        _check_alpha(self.kind, self.alpha, self.concave)

    @property
    def spec(self) -> str:
        return f"{self.kind}:{self.alpha:g}"

    @property
    def g(self) -> OpConcaveFn:
        return one_minus_alpha_pow(self.alpha)

    def _spectral(self, X: np.ndarray, Y: np.ndarray) -> SpectralDivergence:
        return SpectralDivergence("petz", X, Y, self.alpha)

    @property
    def _spectral_sign(self) -> float:
        return 1.0 if self.concave else -1.0


@dataclass(frozen=True)
class HypoQalpha(_PetzCone):
    kind: ClassVar[str] = "hypo_qalpha"
    sigma: ClassVar[float] = -1.0


@dataclass(frozen=True)
class EpiQalpha(_PetzCone):
    alpha: float = 1.5
    kind: ClassVar[str] = "epi_qalpha"
    concave: ClassVar[bool] = False


@dataclass(frozen=True)
class EpiDBS(ScalarSlackCone):
    kind: ClassVar[str] = "epi_dbs"
    route: ClassVar[str] = "quadrature"

    @property
    def g(self) -> OpConcaveFn:
        return catalog("log")


@dataclass(frozen=True)
class _QhatCone(ScalarSlackCone):
    alpha: float = 0.5
    route: ClassVar[str] = "quadrature"
    concave: ClassVar[bool] = True

    def __post_init__(self) -> None:
        super().__post_init__()
        _check_alpha(self.kind, self.alpha, self.concave)

    @property
    def spec(self) -> str:
        return f"{self.kind}:{self.alpha:g}"

    @property
    def g(self) -> OpConcaveFn:
        return one_minus_alpha_pow(self.alpha)


@dataclass(frozen=True)
class HypoQhat(_QhatCone):
    kind: ClassVar[str] = "hypo_qhat"
    sigma: ClassVar[float] = -1.0


@dataclass(frozen=True)
class EpiQhat(_QhatCone):
    alpha: float = 2.0
    kind: ClassVar[str] = "epi_qhat"
    concave: ClassVar[bool] = False


@dataclass(frozen=True)
class PositiveMap:
    """phi: S^n -> S^m, one of trace, identity or Kraus form sum_i K_i* P K_i."""

    variant: str
    n: int
    kraus: tuple[np.ndarray, ...] = field(default=(), compare=False)

    def __post_init__(self) -> None:
        if self.variant not in MAP_VARIANTS:
            raise ValueError(f"Unknown positive map '{self.variant}'. Expected one of {MAP_VARIANTS}")
        if self.variant != "kraus":
            return
        if not self.kraus:
            raise ValueError("kraus map needs at least one operator")
        ops = tuple(np.asarray(K, dtype=complex) for K in self.kraus)
        shapes = {K.shape for K in ops}
        if len(shapes) != 1 or next(iter(shapes))[0] != self.n:
            raise ValueError(f"kraus operators must all be {self.n} x m, got shapes {sorted(shapes)}")
        # tr phi(P) = tr(P sum_i K_i K_i*)
        gram = sum(K @ K.conj().T for K in ops)
        lam = scipy.linalg.eigvalsh(symmetrize(gram))[0]
        if lam <= KRAUS_PD_TOL * max(1.0, float(np.trace(gram).real)):
            raise ValueError(f"sum of K_i K_i* must be positive definite, lambda_min = {lam:.3e}")
        object.__setattr__(self, "kraus", ops)

    @property
    def m(self) -> int:
        if self.variant == "trace":
            return 1
        if self.variant == "identity":
            return self.n
        return self.kraus[0].shape[1]

    def apply(self, P: np.ndarray) -> np.ndarray:
        return self.apply_stack(P[None])[0]

    def apply_stack(self, stack: np.ndarray) -> np.ndarray:
        if self.variant == "trace":
            return np.trace(stack, axis1=-2, axis2=-1)[:, None, None].astype(complex)
        if self.variant == "identity":
            return stack
        out = sum(K.conj().T[None] @ stack @ K[None] for K in self.kraus)
        return 0.5 * (out + np.conj(np.swapaxes(out, -1, -2)))

    def adjoint(self, S: np.ndarray) -> np.ndarray:
        if self.variant == "trace":
            return complex(S[0, 0]) * np.eye(self.n, dtype=complex)
        if self.variant == "identity":
            return S
        return symmetrize(sum(K @ S @ K.conj().T for K in self.kraus))


@dataclass(frozen=True)
class OpPerspHypo(Cone):
    """{(X, Y, Z) : phi(P_g(X, Y)) >= Z} with barrier -logdet(phi(P_g) - Z) - logdet X - logdet Y."""

    g: OpConcaveFn = field(default_factory=lambda: catalog("log"))
    phi: PositiveMap | None = None
    kind: ClassVar[str] = "op_persp_hypo"

    def __post_init__(self) -> None:
        super().__post_init__()
        if self.phi is None:
            object.__setattr__(self, "phi", PositiveMap("trace", self.n))
        if self.phi.n != self.n:
            raise ValueError(f"positive map acts on {self.phi.n}x{self.phi.n}, cone has n = {self.n}")

    @property
    def spec(self) -> str:
        return f"{self.kind}:{self.g.name}:{self.phi.variant}"

    @property
    def m(self) -> int:
        return self.phi.m

    @property
    def dim(self) -> int:
        return 2 * self.n * self.n + self.m * self.m

    @property
    def nu(self) -> float:
        return 2.0 * self.n + self.m

    def to_vector(self, pt: ConePoint) -> np.ndarray:
        Z = np.atleast_2d(np.asarray(pt.Z, dtype=complex))
        return np.concatenate([hvec(hermitian(pt.X, "X")), hvec(hermitian(pt.Y, "Y")), hvec(hermitian(Z, "Z"))])

    def from_vector(self, v: np.ndarray) -> ConePoint:
        k = self.n * self.n
        return ConePoint(hmat(v[:k], self.n), hmat(v[k : 2 * k], self.n), hmat(v[2 * k :], self.m))

    def _unpack(self, pt: ConePoint | np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        pt = self._point(pt)
        X, Y = hermitian(pt.X, "X"), hermitian(pt.Y, "Y")
        Z = hermitian(np.atleast_2d(np.asarray(pt.Z, dtype=complex)), "Z")
        if X.shape != (self.n, self.n) or Y.shape != (self.n, self.n) or Z.shape != (self.m, self.m):
            raise ValueError(
                f"{self.spec} expects X, Y of size {self.n} and Z of size {self.m}, "
                f"got {X.shape}, {Y.shape}, {Z.shape}"
            )
        return X, Y, Z

    def barrier(self, pt: ConePoint | np.ndarray, order: int = 2, block: int | None = None) -> BarrierEval:
        self._check_order(order)
        X, Y, Z = self._unpack(pt)
        _check_pd(X, "X", block)
        _check_pd(Y, "Y", block)
        oracle = QuadraturePerspective(self.g, X, Y)
        S = symmetrize(self.phi.apply(oracle.value) - Z)
        _check_pd(S, "slack", block)
        value = -logdet(S) - logdet(X) - logdet(Y)
        if order == 0:
            return BarrierEval(value)
        k = self.n * self.n
        s_inv = inv_pd(S)
        R = self.phi.adjoint(s_inv)
        Hs, Vs = xy_directions(self.n)
        DP = oracle.first_derivatives(Hs, Vs)
        grad_xy = -np.real(np.einsum("ij,aji->a", R, DP))
        grad = np.concatenate([grad_xy, hvec(s_inv)])
        grad[:k] -= hvec(inv_pd(X))
        grad[k : 2 * k] -= hvec(inv_pd(Y))
        if order == 1:
            return BarrierEval(value, grad)
        DS = np.concatenate([self.phi.apply_stack(DP), -hvec_basis(self.m)])
        J = hvec_batch(congruence_stack(cholesky(S, "slack"), DS))
        hess = J @ J.T
        hess[: 2 * k, : 2 * k] -= oracle.hessian_form(Hs, Vs, sqrt_psd(R))
        hess[:k, :k] += logdet_hessian(X)
        hess[k : 2 * k, k : 2 * k] += logdet_hessian(Y)
        return BarrierEval(value, grad, 0.5 * (hess + hess.T))

    def closure_member(self, pt: ConePoint | np.ndarray, tol: float = CLOSURE_TOL) -> bool:
        X, Y, Z = self._unpack(pt)
        if not (_psd_ok(X, tol) and _psd_ok(Y, tol)):
            return False
        if not _domain_ok(self.g, X, Y, tol):
            return False
        P = boundary_persp(self.g, X, Y, tol)
        if np.any(np.isneginf(P.real)):
            return False
        S = symmetrize(self.phi.apply(P) - Z)
        return bool(scipy.linalg.eigvalsh(S)[0] >= -10.0 * tol * _scale(X, Y, Z))

    def feasible_start(self) -> ConePoint:
        eye = np.eye(self.n, dtype=complex)
        Z = self.g.g1 * self.phi.apply(eye) - np.eye(self.m)
        return ConePoint(eye, eye.copy(), symmetrize(Z))

    @property
    def lb_dims(self) -> tuple[int, int]:
        return 2 * self.n, self.m

    def lb_map(self, x: np.ndarray) -> np.ndarray:
        X, Y = np.diag(x[: self.n]).astype(complex), np.diag(x[self.n :]).astype(complex)
        return self.phi.apply(boundary_persp(self.g, X, Y, 0.0))

    def lb_point(self, x: np.ndarray, z_h: np.ndarray) -> ConePoint:
        X, Y = np.diag(x[: self.n]).astype(complex), np.diag(x[self.n :]).astype(complex)
        return ConePoint(X, Y, symmetrize(np.asarray(z_h, dtype=complex)))


@dataclass(frozen=True)
class TracePerspHypo(Cone):
    """{(x, Y, z) : x tr f(Y / x) >= z}, coordinates [x, hvec(Y), z], parameter n + 2."""

    f: OpConcaveFn = field(default_factory=lambda: catalog("log"))
    kind: ClassVar[str] = "trace_persp_hypo"

    @property
    def spec(self) -> str:
        return f"{self.kind}:{self.f.name}"

    @property
    def dim(self) -> int:
        return self.n * self.n + 2

    @property
    def nu(self) -> float:
        return self.n + 2.0

    def to_vector(self, pt: ConePoint) -> np.ndarray:
        return np.concatenate([[float(np.real(pt.X))], hvec(hermitian(pt.Y, "Y")), [float(pt.Z)]])

    def from_vector(self, v: np.ndarray) -> ConePoint:
        return ConePoint(float(v[0]), hmat(v[1:-1], self.n), float(v[-1]))

    def _unpack(self, pt: ConePoint | np.ndarray) -> tuple[float, np.ndarray, float]:
        pt = self._point(pt)
        if np.ndim(pt.X) != 0 or np.ndim(pt.Z) != 0:
            raise ValueError(f"{self.spec} expects scalar x and z")
        Y = hermitian(pt.Y, "Y")
        if Y.shape != (self.n, self.n):
            raise ValueError(f"{self.spec} expects a {self.n}x{self.n} Y, got {Y.shape}")
        return float(np.real(pt.X)), Y, float(pt.Z)

    def barrier(self, pt: ConePoint | np.ndarray, order: int = 2, block: int | None = None) -> BarrierEval:
        self._check_order(order)
        x, Y, z = self._unpack(pt)
        if not x > 0.0:
            raise InfeasiblePointError("x", f"x = {x:.3e}", block)
        _check_pd(Y, "Y", block)
        eye = np.eye(self.n)
        oracle = QuadraturePerspective(self.f, x * eye, Y)
        u = float(np.real(np.trace(oracle.value))) - z
        if not (u > 0.0 and math.isfinite(u)):
            raise InfeasiblePointError("slack", f"x tr f(Y/x) - z = {u:.3e}", block)
        value = -math.log(u) - math.log(x) - logdet(Y)
        if order == 0:
            return BarrierEval(value)
        Hs, Vs = scalar_x_directions(self.n)
        grad_u = np.concatenate([np.real(np.trace(oracle.first_derivatives(Hs, Vs), axis1=-2, axis2=-1)), [-1.0]])
        grad = -grad_u / u
        grad[0] -= 1.0 / x
        grad[1:-1] -= hvec(inv_pd(Y))
        if order == 1:
            return BarrierEval(value, grad)
        hess = np.outer(grad_u, grad_u) / (u * u)
        hess[:-1, :-1] -= oracle.hessian_form(Hs, Vs) / u
        hess[0, 0] += 1.0 / (x * x)
        hess[1:-1, 1:-1] += logdet_hessian(Y)
        return BarrierEval(value, grad, 0.5 * (hess + hess.T))

    def closure_member(self, pt: ConePoint | np.ndarray, tol: float = CLOSURE_TOL) -> bool:
        x, Y, z = self._unpack(pt)
        if x < -tol or not _psd_ok(Y, tol):
            return False
        X = max(x, 0.0) * np.eye(self.n)
        if not _domain_ok(self.f, X, Y, tol):
            return False
        h = boundary_trace_value(self.f, X, Y, tol)
        if not math.isfinite(h):
            return False
        return h - z >= -10.0 * tol * _scale(Y, x, z)

    def feasible_start(self) -> ConePoint:
        return ConePoint(1.0, np.eye(self.n, dtype=complex), self.n * self.f.g1 - 1.0)

    @property
    def lb_dims(self) -> tuple[int, int]:
        return self.n + 1, 1

    def lb_map(self, x: np.ndarray) -> np.ndarray:
        Y = np.diag(x[1:]).astype(complex)
        return np.array([[boundary_trace_value(self.f, x[0] * np.eye(self.n), Y, 0.0)]])

    def lb_point(self, x: np.ndarray, z_h: np.ndarray) -> ConePoint:
        return ConePoint(float(x[0]), np.diag(x[1:]).astype(complex), float(np.real(np.asarray(z_h).reshape(-1)[0])))


CONE_KINDS = (
    "epi_qre",
    "hypo_qalpha",
    "epi_qalpha",
    "epi_dbs",
    "hypo_qhat",
    "epi_qhat",
    "op_persp_hypo",
    "trace_persp_hypo",
    "psd",
)

_ALPHA_CONES: dict[str, type[ScalarSlackCone]] = {
    "hypo_qalpha": HypoQalpha,
    "epi_qalpha": EpiQalpha,
    "hypo_qhat": HypoQhat,
    "epi_qhat": EpiQhat,
}


def _kraus_ops(params: Mapping[str, Any] | None) -> tuple[np.ndarray, ...]:
    if not params or "kraus" not in params:
        raise ValueError("kraus map needs params.kraus")
    return tuple(np.asarray(K, dtype=complex) for K in params["kraus"])


def parse_cone(spec: str, n: int, m: int | None = None, params: Mapping[str, Any] | None = None) -> Cone:
    """Build a cone from its problem-file string, e.g. "hypo_qalpha:0.5" or "op_persp_hypo:pow:0.5:kraus"."""
    kind, _, rest = spec.partition(":")
    if kind not in CONE_KINDS:
        raise ValueError(f"Unknown cone kind '{kind}'. Expected one of {CONE_KINDS}")
    if kind in ("epi_qre", "epi_dbs", "psd"):
        if rest:
            raise ValueError(f"cone kind '{kind}' takes no parameters, got '{rest}'")
        return {"epi_qre": EpiQRE, "epi_dbs": EpiDBS, "psd": PSDCone}[kind](n)
    if kind in _ALPHA_CONES:
        try:
            alpha = float(rest)
        except ValueError as exc:
            raise ValueError(f"cone kind '{kind}' needs a numeric alpha, got '{rest}'") from exc
        return _ALPHA_CONES[kind](n, alpha)
    if kind == "trace_persp_hypo":
        if not rest:
            raise ValueError("trace_persp_hypo needs a function, e.g. 'trace_persp_hypo:log'")
        return TracePerspHypo(n, catalog(rest))
    fn_spec, _, variant = rest.rpartition(":")
    if not fn_spec:
        raise ValueError(f"op_persp_hypo needs '<function>:<map>', got '{rest}'")
    kraus = _kraus_ops(params) if variant == "kraus" else ()
    phi = PositiveMap(variant, n, kraus)
    if m is not None and phi.m != m:
        raise ValueError(f"declared m = {m} does not match the {variant} map's output size {phi.m}")
    return OpPerspHypo(n, catalog(fn_spec), phi)


def barrier_eval(cone: Cone, pt: ConePoint | np.ndarray, order: int = 2) -> BarrierEval:
    return cone.barrier(pt, order)


def block_offsets(cones: Sequence[Cone]) -> list[int]:
    offsets = [0]
    for cone in cones:
        offsets.append(offsets[-1] + cone.dim)
    return offsets
