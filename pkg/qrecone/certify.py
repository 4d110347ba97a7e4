from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Callable

import numpy as np
import scipy.linalg

from .barriers import Cone, ConePoint, OpPerspHypo, PSDCone, ScalarSlackCone, TracePerspHypo
from .hermitian import hmat, logdet_derivs, psi_apply, random_hermitian, random_pd, symmetrize
from .perspective import (
    FD_STEP,
    QuadraturePerspective,
    SpectralDivergence,
    central_difference,
    midpoint_congruence,
    tensor_log,
    tensor_pow,
    xi_deriv,
)

logger = logging.getLogger(__name__)

FD_TOL = 1e-3
EXACT_TOL = 1e-6
DEGENERATE_D2 = 1e-14
COMPAT_S = (0.0, 0.25, 0.5, 0.75, 1.0)

DirectionSampler = Callable[[np.random.Generator, Cone, np.ndarray], np.ndarray]


@dataclass
class CertReport:
    """Outcome of one sampled check; worst is the largest observed value of the checked quantity."""

    check: str
    target: str
    seed: int
    samples: int
    tol: float
    worst: float
    passed: bool
    skipped: int = 0
    best: float | None = None
    witness: dict[str, Any] | None = None

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f" skipped={self.skipped}" if self.skipped else ""
        return (
            f"{status:4} {self.check:7} {self.target:28} worst={self.worst:.9g} tol={self.tol:g} "
            f"samples={self.samples}{extra} seed={self.seed}"
        )


@dataclass
class LBCertificate:
    cone: str
    eps: float
    x0: np.ndarray
    directions: list[np.ndarray]
    a: list[float]
    b: list[float]
    a_prime: list[float]
    b_prime: list[float]
    tau_prime: float
    bound: float
    premises: dict[str, bool] = field(default_factory=dict)

    @property
    def valid(self) -> bool:
        return all(self.premises.values())

    @property
    def failed_premises(self) -> list[str]:
        return [name for name, ok in self.premises.items() if not ok]

    def formula(self) -> str:
        N, m = len(self.a), len(self.a_prime)
        return f"{N}/(({N}-1)*{self.eps:g}+1) + {m} = {self.bound:.10g}"


def random_interior_point(cone: Cone, rng: np.random.Generator) -> np.ndarray:
    """X = A A* + 1e-3 I style blocks with a log-normal slack margin, as a coordinate vector."""
    n = cone.n
    if isinstance(cone, PSDCone):
        return cone.to_vector(ConePoint(random_pd(rng, n)))
    Y = random_pd(rng, n)
    u = float(np.exp(rng.standard_normal()))
    if isinstance(cone, ScalarSlackCone):
        X = random_pd(rng, n)
        h = cone.h_oracle(X, Y, 0)[0]
        return cone.to_vector(ConePoint(X, Y, cone.sigma * (u - h)))
    if isinstance(cone, OpPerspHypo):
        X = random_pd(rng, n)
        P = QuadraturePerspective(cone.g, X, Y).value
        Z = symmetrize(cone.phi.apply(P) - random_pd(rng, cone.m))
        return cone.to_vector(ConePoint(X, Y, Z))
    if isinstance(cone, TracePerspHypo):
        x = float(np.exp(rng.standard_normal()))
        h = float(np.real(np.trace(QuadraturePerspective(cone.f, x * np.eye(n), Y).value)))
        return cone.to_vector(ConePoint(x, Y, h - u))
    raise ValueError(f"no sampler for cone {cone.spec}")


def gaussian_direction(rng: np.random.Generator, cone: Cone, v: np.ndarray) -> np.ndarray:
    return rng.standard_normal(cone.dim)


def check_sc(
    cone: Cone,
    samples: int = 100,
    tol: float = FD_TOL,
    seed: int = 0,
    direction: DirectionSampler = gaussian_direction,
) -> CertReport:
    """max |D^3 F[h]| / (2 (D^2 F[h])^{3/2}), D^3 by differences of exact Hessians (exact for -logdet)."""
    rng = np.random.default_rng(seed)
    worst, skipped, witness = 0.0, 0, None
    for index in range(samples):
        v = random_interior_point(cone, rng)
        hess = cone.barrier(v, 2).hess
        h = np.asarray(direction(rng, cone, v), dtype=float)
        d2 = float(h @ hess @ h)
        if d2 < DEGENERATE_D2:
            skipped += 1
            continue
        h = h / math.sqrt(d2)
        if isinstance(cone, PSDCone):
            d3 = logdet_derivs(hmat(v, cone.n), hmat(h, cone.n), 3)
        else:
            d3 = central_difference(lambda t: float(h @ cone.barrier(v + t * h, 2).hess @ h), FD_STEP)
        ratio = abs(d3) / 2.0
        if ratio > worst:
            worst, witness = ratio, {"sample": index, "point": v.tolist(), "direction": h.tolist()}
    logger.debug("check_sc %s: worst ratio %.6g over %d samples", cone.spec, worst, samples)
    return CertReport("sc", cone.spec, seed, samples, tol, worst, worst <= 1.0 + tol, skipped, witness=witness)


def check_sc_logdet(n: int, samples: int = 1000, seed: int = 0, rank_one: bool = False, tol: float = EXACT_TOL) -> CertReport:
    """Exact |tr A^3| / (tr A^2)^{3/2} for -logdet with A = X^{-1/2} H X^{-1/2}; rank-one H attains 1."""
    rng = np.random.default_rng(seed)
    worst, best = 0.0, math.inf
    for _ in range(samples):
        X = random_pd(rng, n)
        if rank_one:
            L = scipy.linalg.cholesky(X, lower=True)
            w = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            H = symmetrize(L @ np.outer(w, w.conj()) @ L.conj().T)
        else:
            H = random_hermitian(rng, n)
        d2 = logdet_derivs(X, H, 2)
        ratio = abs(logdet_derivs(X, H, 3)) / (2.0 * d2**1.5)
        worst, best = max(worst, ratio), min(best, ratio)
    return CertReport("sc", f"psd:{n}", seed, samples, tol, worst, worst <= 1.0 + tol, best=best)


def check_nu(cone: Cone, samples: int = 100, tol: float = EXACT_TOL, seed: int = 0) -> CertReport:
    """g^T H^{-1} g at sampled points must equal nu to tol (attained, not only bounded).

    The maximiser h = H^{-1} g of 2 Df[h] - D^2 f[h] is checked against the Euler direction -x
    in the local norm ||r||_x = (r^T H r)^{1/2}, relative to ||x||_x = nu^{1/2}.
    """
    rng = np.random.default_rng(seed)
    worst, best, skipped, witness, mismatch = -math.inf, math.inf, 0, None, None
    for index in range(samples):
        v = random_interior_point(cone, rng)
        ev = cone.barrier(v, 2)
        try:
            h_star = scipy.linalg.solve(ev.hess, ev.grad, assume_a="pos")
        except (np.linalg.LinAlgError, ValueError) as exc:
            logger.warning("check_nu %s: sample %d rejected, Hessian not invertible (%s)", cone.spec, index, exc)
            skipped += 1
            continue
        value = float(ev.grad @ h_star)
        quad = 2.0 * value - float(h_star @ ev.hess @ h_star)
        r = h_star + v
        euler_gap = math.sqrt(max(float(r @ ev.hess @ r), 0.0) / cone.nu)
        if mismatch is None and (abs(quad - value) > tol * max(1.0, value) or euler_gap > tol):
            mismatch = {"sample": index, "point": v.tolist(), "maximizer_gap": abs(quad - value), "euler_gap": euler_gap}
        if value > worst:
            worst, witness = value, {"sample": index, "point": v.tolist()}
        best = min(best, value)
    passed = mismatch is None and worst <= cone.nu + tol and best >= cone.nu - tol
    return CertReport("nu", cone.spec, seed, samples, tol, worst, passed, skipped, best, mismatch or witness)


def _lift(X: np.ndarray, Y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n1, n2 = X.shape[0], Y.shape[0]
    return np.kron(X, np.eye(n2)), np.kron(np.eye(n1), np.conj(Y))


def check_compat(
    n: int = 3,
    samples: int = 1000,
    tol: float = 1e-9,
    seed: int = 0,
    tensor: bool = False,
    beta: float = 1.0,
    s_values: tuple[float, ...] = COMPAT_S,
) -> CertReport:
    """Absolute margins lambda_max(D^3 xi_s - 3 beta (D^2 F)^{1/2} (-D^2 xi_s)) and ||B_s|| - (D^2 F)^{1/2}.

    F = -logdet X - logdet Y; with tensor=True xi_s is evaluated at (X kron I, I kron conj(Y)) for n x n blocks.
    """
    rng = np.random.default_rng(seed)
    worst, witness = -math.inf, None
    for index in range(samples):
        X, Y = random_pd(rng, n), random_pd(rng, n)
        H, V = random_hermitian(rng, n), random_hermitian(rng, n)
        local = math.sqrt(logdet_derivs(X, H, 2) + logdet_derivs(Y, V, 2))
        H, V = H / local, V / local
        if tensor:
            X, Y = _lift(X, Y)
            H, V = _lift(H, V)
        for s in s_values:
            d2 = xi_deriv(s, X, Y, H, V, 2)
            d3 = xi_deriv(s, X, Y, H, V, 3)
            compat = float(scipy.linalg.eigvalsh(symmetrize(d3 + 3.0 * beta * d2))[-1])
            eta = float(np.linalg.norm(midpoint_congruence(s, X, Y, H, V), 2)) - 1.0
            margin = max(compat, eta)
            if margin > worst:
                worst, witness = margin, {"sample": index, "s": s, "compat": compat, "eta": eta}
    target = f"tensor:{n}x{n}" if tensor else f"xi:{n}"
    return CertReport("compat", target, seed, samples, tol, worst, worst <= tol, witness=witness)


def lb_certificate(cone: Cone, eps: float = 1e-4, tol: float = 1e-9) -> LBCertificate:
    """Lower bound N/((N-1) eps + 1) + m from the diagonal restriction h: R^N_{++} -> S^m of the cone."""
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    N, m = cone.lb_dims
    ones = np.ones(N)
    xs = [eps * ones + (1.0 - eps) * e for e in np.eye(N)]
    b = (N - 1) * eps + 1.0
    x0 = b * ones
    zs = [np.outer(e, e).astype(complex) for e in np.eye(m)]
    eye_m = np.eye(m, dtype=complex)
    h0 = cone.lb_map(x0)
    hs = [cone.lb_map(x) for x in xs]
    D = symmetrize(h0 - sum(hs))
    tau_prime = max(float(scipy.linalg.eigvalsh(D)[-1]), 0.0) + 1.0
    tau = 2.0 * tau_prime
    zero = np.zeros(N)

    premises = {
        "x_i in K": all(bool(np.all(x > 0.0)) for x in xs),
        "x0 - b_i x_i not in K": all(float(np.min(x0 - b * x)) <= 0.0 for x in xs),
        "z0 in int K'": float(scipy.linalg.eigvalsh(sum(zs))[0]) > 0.0,
        "z0 - b'_i z_i not in int K'": all(float(scipy.linalg.eigvalsh(eye_m - z)[0]) <= tol for z in zs),
        "tau' z0 - (h(x0) - sum h(x_i)) in K'": float(scipy.linalg.eigvalsh(tau_prime * eye_m - D)[0]) >= 0.0,
        "y0 interior": cone.interior(cone.lb_point(x0, h0 - tau * eye_m)),
        "p_i in closure": all(cone.closure_member(cone.lb_point(x, h), tol) for x, h in zip(xs, hs)),
        "p'_i in closure": all(cone.closure_member(cone.lb_point(zero, -tau * z), tol) for z in zs),
        "combined point in closure": cone.closure_member(cone.lb_point(zero, D - tau_prime * eye_m), tol),
    }
    cert = LBCertificate(
        cone=cone.spec,
        eps=eps,
        x0=x0,
        directions=xs,
        a=[1.0] * N,
        b=[b] * N,
        a_prime=[1.0] * m,
        b_prime=[1.0] * m,
        tau_prime=tau_prime,
        bound=N / b + m,
        premises=premises,
    )
    if not cert.valid:
        logger.warning("lower-bound certificate for %s failed premises: %s", cone.spec, ", ".join(cert.failed_premises))
    return cert


def check_tensor_identity(n: int = 2, samples: int = 200, tol: float = 1e-10, seed: int = 0, alpha: float = 0.5) -> CertReport:
    """D(X|Y) = -Psi(P_log(X kron I, I kron conj Y)) and Q_alpha = Psi(X^alpha kron conj(Y)^(1-alpha))."""
    rng = np.random.default_rng(seed)
    worst, witness = 0.0, None
    for index in range(samples):
        X, Y = random_pd(rng, n), random_pd(rng, n)
        d = SpectralDivergence("qre", X, Y).value
        q = SpectralDivergence("petz", X, Y, alpha).value
        err_d = abs(d + psi_apply(tensor_log(X, Y))) / (1.0 + abs(d))
        err_q = abs(q - psi_apply(tensor_pow(alpha, X, Y))) / (1.0 + abs(q))
        err = max(err_d, err_q)
        if err > worst:
            worst, witness = err, {"sample": index, "qre_error": err_d, "petz_error": err_q}
    return CertReport("tensor", f"n={n}", seed, samples, tol, worst, worst <= tol, witness=witness)
