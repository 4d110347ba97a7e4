from __future__ import annotations

import logging
import math
from typing import Callable

import numpy as np
import scipy.linalg

from .errors import DomainError, InfeasiblePointError
from .hermitian import (
    LOG,
    ScalarFn,
    apply_fn,
    first_difference_table,
    frechet1,
    frechet2,
    hermitian,
    hvec_basis,
    hvec_batch,
    power_fn,
    require_pd,
    second_difference_table,
    spectral,
    symmetrize,
)
from .opfun import OpConcaveFn, catalog, domain_case, one_minus_alpha_pow

logger = logging.getLogger(__name__)

FD_STEP = 1e-4
DIVERGENCE_KINDS = ("qre", "petz", "bs", "qhat", "trace_persp")


def _scalar(g: OpConcaveFn | ScalarFn) -> ScalarFn:
    return g.scalar if isinstance(g, OpConcaveFn) else g


def _midpoint(s: float, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    Ys = (1.0 - s) * X + s * Y
    try:
        return scipy.linalg.cholesky(Ys, lower=True)
    except np.linalg.LinAlgError as exc:
        raise InfeasiblePointError("X + s(Y - X)", f"singular midpoint at s = {s}") from exc


def _lsolve(L: np.ndarray, M: np.ndarray) -> np.ndarray:
    return scipy.linalg.solve_triangular(L, M, lower=True)


def xi(s: float, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """-(Y - X)(X + s(Y - X))^{-1}(Y - X)."""
    X, Y = hermitian(X, "X"), hermitian(Y, "Y")
    W = _lsolve(_midpoint(s, X, Y), Y - X)
    return -symmetrize(W.conj().T @ W)


def xi_deriv(s: float, X: np.ndarray, Y: np.ndarray, H: np.ndarray, V: np.ndarray, k: int) -> np.ndarray:
    if k not in (1, 2, 3):
        raise ValueError(f"derivative order must be 1, 2 or 3, got {k}")
    X, Y = hermitian(X, "X"), hermitian(Y, "Y")
    H, V = hermitian(H, "H"), hermitian(V, "V")
    L = _midpoint(s, X, Y)
    L1 = _lsolve(L, Y - X)
    L2 = _lsolve(L, V - H)
    B = symmetrize(_lsolve(L, _lsolve(L, (1.0 - s) * H + s * V).conj().T))
    minus_b = -B
    eye = np.eye(X.shape[0])
    m11 = np.linalg.matrix_power(minus_b, k)
    m12 = np.linalg.matrix_power(minus_b, k - 1)
    m22 = np.linalg.matrix_power(minus_b, k - 2) if k >= 2 else 0.0 * eye
    total = L1.conj().T @ m11 @ L1 + L1.conj().T @ m12 @ L2 + L2.conj().T @ m12 @ L1 + L2.conj().T @ m22 @ L2
    return -math.factorial(k) * symmetrize(total)


def midpoint_congruence(s: float, X: np.ndarray, Y: np.ndarray, H: np.ndarray, V: np.ndarray) -> np.ndarray:
    """B_s = Y_s^{-1/2} V_s Y_s^{-1/2} up to unitary similarity."""
    L = _midpoint(s, X, Y)
    return symmetrize(_lsolve(L, _lsolve(L, (1.0 - s) * H + s * V).conj().T))


def _inv_sqrt_and_sqrt(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    S = spectral(X)
    if S.lambda_min() <= 0.0:
        raise DomainError("perspective", S.lambda_min())
    root = np.sqrt(S.eigenvalues)
    U = S.eigenvectors
    return symmetrize((U / root) @ U.conj().T), symmetrize((U * root) @ U.conj().T)


def persp(g: OpConcaveFn | ScalarFn, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Spectral route X^{1/2} g(X^{-1/2} Y X^{-1/2}) X^{1/2}."""
    X, Y = hermitian(X, "X"), hermitian(Y, "Y")
    inv_root, root = _inv_sqrt_and_sqrt(X)
    inner = apply_fn(spectral(inv_root @ Y @ inv_root), _scalar(g))
    return symmetrize(root @ inner @ root)


def ratio_spectrum(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Eigenvalues of X^{-1/2} Y X^{-1/2}."""
    return scipy.linalg.eigh(Y, X, eigvals_only=True)


class QuadraturePerspective:
    """P_g(X, Y) = g(1) X + g'(1)(Y - X) + sum_k w_k xi_{s_k}(X, Y), with exact derivatives of the sum.

    The pair is scaled by tau = sqrt(lmax(X) lmax(Y)) and results are unscaled by homogeneity.
    """

    def __init__(self, g: OpConcaveFn, X: np.ndarray, Y: np.ndarray) -> None:
        self.g = g
        self.n = X.shape[0]
        self.tau = float(np.sqrt(scipy.linalg.eigvalsh(X)[-1] * scipy.linalg.eigvalsh(Y)[-1]))
        if not self.tau > 0.0 or not np.isfinite(self.tau):
            raise InfeasiblePointError("X, Y", "zero or non-finite scale")
        self.X = X / self.tau
        self.Y = Y / self.tau
        try:
            ratios = ratio_spectrum(self.X, self.Y)
        except np.linalg.LinAlgError as exc:
            raise InfeasiblePointError("X", "not positive definite") from exc
        if ratios[0] <= 0.0:
            raise InfeasiblePointError("Y", f"ratio eigenvalue {ratios[0]:.3e}")
        self.measure = g.measure_for(float(ratios[0]), float(ratios[-1]))
        self.delta = self.Y - self.X
        eye = np.eye(self.n)
        self._factors: list[tuple[float, float, np.ndarray, np.ndarray]] = []
        total = g.g1 * self.X + g.gp1 * self.delta
        for s, w in zip(self.measure.nodes, self.measure.weights):
            L = _midpoint(float(s), self.X, self.Y)
            Q = scipy.linalg.cho_solve((L, True), self.delta)
            total = total - w * (self.delta @ Q)
            self._factors.append((float(s), float(w), Q, _lsolve(L, eye)))
        self._value = symmetrize(total)

    @property
    def value(self) -> np.ndarray:
        return self.tau * self._value

    def first_derivatives(self, H: np.ndarray, V: np.ndarray) -> np.ndarray:
        """DP[H_a, V_a] for stacks of directions of shape (D, n, n)."""
        d_delta = V - H
        out = self.g.g1 * H + self.g.gp1 * d_delta
        for s, w, Q, _ in self._factors:
            Qh = Q.conj().T
            V_s = (1.0 - s) * H + s * V
            out = out + w * (Qh[None] @ V_s @ Q[None] - Qh[None] @ d_delta - d_delta @ Q[None])
        return 0.5 * (out + np.conj(np.swapaxes(out, -1, -2)))

    def hessian_form(self, H: np.ndarray, V: np.ndarray, R_half: np.ndarray | None = None) -> np.ndarray:
        """Matrix of tr(R D^2 P[d_a, d_b]) over the direction stack, R = R_half^2 (identity when None)."""
        d_delta = V - H
        D = H.shape[0]
        form = np.zeros((D, D))
        for s, w, Q, Linv in self._factors:
            V_s = (1.0 - s) * H + s * V
            G = Linv[None] @ (V_s @ Q[None] - d_delta)
            if R_half is not None:
                G = G @ R_half[None]
            flat = G.reshape(D, -1)
            real = np.concatenate([flat.real, flat.imag], axis=1)
            form -= 2.0 * w * (real @ real.T)
        return form / self.tau

    def derivative(self, H: np.ndarray, V: np.ndarray, k: int) -> np.ndarray:
        if k == 1:
            return self.first_derivatives(H[None], V[None])[0]
        total = np.zeros((self.n, self.n), dtype=complex)
        for s, w, _, _ in self._factors:
            total = total + w * xi_deriv(s, self.X, self.Y, H, V, k)
        return total * self.tau ** (1 - k)


def persp_quad(g: OpConcaveFn, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    return QuadraturePerspective(g, hermitian(X, "X"), hermitian(Y, "Y")).value


def persp_deriv(g: OpConcaveFn, X: np.ndarray, Y: np.ndarray, H: np.ndarray, V: np.ndarray, k: int) -> np.ndarray:
    if k not in (1, 2, 3):
        raise ValueError(f"derivative order must be 1, 2 or 3, got {k}")
    oracle = QuadraturePerspective(g, hermitian(X, "X"), hermitian(Y, "Y"))
    return oracle.derivative(hermitian(H, "H"), hermitian(V, "V"), k)


def xy_directions(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Stacked basis directions (E_a, 0) followed by (0, E_b)."""
    basis = hvec_basis(n)
    zeros = np.zeros_like(basis)
    return np.concatenate([basis, zeros]), np.concatenate([zeros, basis])


def scalar_x_directions(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Directions for X = xI: (I, 0) followed by (0, E_b)."""
    basis = hvec_basis(n)
    eye = np.eye(n, dtype=complex)[None]
    return (
        np.concatenate([eye, np.zeros_like(basis)]),
        np.concatenate([np.zeros_like(eye), basis]),
    )


def tensor_log(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    X, Y = hermitian(X, "X"), hermitian(Y, "Y")
    require_pd(X, "X")
    require_pd(Y, "Y")
    log_x = apply_fn(spectral(X), LOG)
    log_y = apply_fn(spectral(Y), LOG)
    n1, n2 = X.shape[0], Y.shape[0]
    return -np.kron(X @ log_x, np.eye(n2)) + np.kron(X, np.conj(log_y))


def tensor_pow(alpha: float, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    X, Y = hermitian(X, "X"), hermitian(Y, "Y")
    require_pd(X, "X")
    require_pd(Y, "Y")
    return np.kron(apply_fn(spectral(X), power_fn(alpha)), np.conj(apply_fn(spectral(Y), power_fn(1.0 - alpha))))


def tensor_persp(g: OpConcaveFn | ScalarFn, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Explicit P_g(X kron I, I kron conj(Y)); quadratic memory in n1 n2."""
    n1, n2 = X.shape[0], Y.shape[0]
    return persp(g, np.kron(X, np.eye(n2)), np.kron(np.eye(n1), np.conj(Y)))


class SpectralDivergence:
    """D(X|Y) or Q_a(X|Y) with split spectral derivatives (no n^2 x n^2 matrices)."""

    def __init__(self, kind: str, X: np.ndarray, Y: np.ndarray, alpha: float | None = None) -> None:
        if kind not in ("qre", "petz"):
            raise ValueError(f"split spectral route supports 'qre' and 'petz', got '{kind}'")
        self.kind = kind
        self.alpha = alpha
        self.n = X.shape[0]
        self.X, self.Y = X, Y
        self.SX, self.SY = spectral(X), spectral(Y)
        if self.SX.lambda_min() <= 0.0:
            raise InfeasiblePointError("X", f"lambda_min = {self.SX.lambda_min():.3e}")
        if self.SY.lambda_min() <= 0.0:
            raise InfeasiblePointError("Y", f"lambda_min = {self.SY.lambda_min():.3e}")
        if kind == "qre":
            self.fx, self.fy = LOG, LOG
            log_x, log_y = apply_fn(self.SX, LOG), apply_fn(self.SY, LOG)
            self.value = float(np.real(np.trace(X @ (log_x - log_y))))
            self._log_diff = log_x - log_y
        else:
            if alpha is None:
                raise ValueError("petz divergence needs alpha")
            self.fx, self.fy = power_fn(alpha), power_fn(1.0 - alpha)
            self.AX = apply_fn(self.SX, self.fx)
            self.BY = apply_fn(self.SY, self.fy)
            self.value = float(np.real(np.trace(self.AX @ self.BY)))
        self.T1X = first_difference_table(self.SX, self.fx)
        self.T1Y = first_difference_table(self.SY, self.fy)
        self.T2X = second_difference_table(self.SX, self.fx)
        self.T2Y = second_difference_table(self.SY, self.fy)

    def grad_pair(self) -> tuple[np.ndarray, np.ndarray]:
        if self.kind == "qre":
            return self._log_diff + np.eye(self.n), -frechet1(self.SY, self.fy, self.X, self.T1Y)
        return frechet1(self.SX, self.fx, self.BY, self.T1X), frechet1(self.SY, self.fy, self.AX, self.T1Y)

    def hess_apply(self, H: np.ndarray, V: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        if self.kind == "qre":
            hx = frechet1(self.SX, self.fx, H, self.T1X) - frechet1(self.SY, self.fy, V, self.T1Y)
            hy = -frechet1(self.SY, self.fy, H, self.T1Y) - frechet2(self.SY, self.fy, self.X, V, self.T2Y)
            return hx, hy
        d_a = frechet1(self.SX, self.fx, H, self.T1X)
        d_b = frechet1(self.SY, self.fy, V, self.T1Y)
        hx = frechet2(self.SX, self.fx, self.BY, H, self.T2X) + frechet1(self.SX, self.fx, d_b, self.T1X)
        hy = frechet1(self.SY, self.fy, d_a, self.T1Y) + frechet2(self.SY, self.fy, self.AX, V, self.T2Y)
        return hx, hy

    def gradient(self) -> np.ndarray:
        gx, gy = self.grad_pair()
        return hvec_batch(np.stack([gx, gy])).ravel()

    def hessian(self) -> np.ndarray:
        Hs, Vs = xy_directions(self.n)
        columns = []
        for H, V in zip(Hs, Vs):
            hx, hy = self.hess_apply(H, V)
            columns.append(hvec_batch(np.stack([hx, hy])).ravel())
        M = np.array(columns).T
        return 0.5 * (M + M.T)

    def directional(self, H: np.ndarray, V: np.ndarray, k: int) -> float:
        if k == 1:
            gx, gy = self.grad_pair()
            return float(np.real(np.vdot(gx, H) + np.vdot(gy, V)))
        if k == 2:
            hx, hy = self.hess_apply(H, V)
            return float(np.real(np.vdot(H, hx) + np.vdot(V, hy)))

        def second(t: float) -> float:
            moved = SpectralDivergence(self.kind, self.X + t * H, self.Y + t * V, self.alpha)
            return moved.directional(H, V, 2)

        return central_difference(second, FD_STEP)


def central_difference(fn: Callable[[float], float], step: float) -> float:
    """Central difference at 0, Richardson-extrapolated once."""
    coarse = (fn(step) - fn(-step)) / (2.0 * step)
    half = 0.5 * step
    fine = (fn(half) - fn(-half)) / (2.0 * half)
    return (4.0 * fine - coarse) / 3.0


def _trace_fn(kind: str, param: float | str | OpConcaveFn | None) -> tuple[OpConcaveFn, float]:
    """Catalog function and sign with divergence = sign * tr P_g for the perspective-route kinds."""
    if kind == "bs":
        return catalog("log"), -1.0
    if kind == "qhat":
        if param is None:
            raise ValueError("qhat divergence needs alpha")
        g = one_minus_alpha_pow(float(param))
        return g, 1.0 if g.family == "pow" else -1.0
    if kind == "trace_persp":
        if param is None:
            raise ValueError("trace_persp divergence needs a function")
        return (param if isinstance(param, OpConcaveFn) else catalog(str(param))), 1.0
    raise ValueError(f"Unknown divergence kind '{kind}'. Expected one of {DIVERGENCE_KINDS}")


def _as_pair(kind: str, X: np.ndarray | float, Y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    Y = hermitian(Y, "Y")
    if kind == "trace_persp" and np.ndim(X) == 0:
        X = float(X) * np.eye(Y.shape[0])
    X = hermitian(X, "X")
    if X.shape != Y.shape:
        raise ValueError(f"X and Y must have equal shapes, got {X.shape} and {Y.shape}")
    require_pd(X, "X")
    require_pd(Y, "Y")
    return X, Y


def trace_divergence(kind: str, X: np.ndarray | float, Y: np.ndarray, param: float | str | OpConcaveFn | None = None) -> float:
    """D, Q_alpha (split spectral route), D_BS, Q-hat_alpha and tr(x f(Y/x)) (perspective route).

    For kind "trace_persp" X may be the scalar x.
    """
    X, Y = _as_pair(kind, X, Y)
    if kind == "qre":
        return SpectralDivergence("qre", X, Y).value
    if kind == "petz":
        if param is None:
            raise ValueError("petz divergence needs alpha")
        return SpectralDivergence("petz", X, Y, float(param)).value
    g, sign = _trace_fn(kind, param)
    return sign * float(np.real(np.trace(persp(g, X, Y))))


def trace_divergence_deriv(
    kind: str,
    X: np.ndarray | float,
    Y: np.ndarray,
    H: np.ndarray | float,
    V: np.ndarray,
    k: int,
    param: float | str | OpConcaveFn | None = None,
) -> float:
    if k not in (1, 2, 3):
        raise ValueError(f"derivative order must be 1, 2 or 3, got {k}")
    X, Y = _as_pair(kind, X, Y)
    if kind == "trace_persp" and np.ndim(H) == 0:
        H = float(H) * np.eye(Y.shape[0])
    H, V = hermitian(H, "H"), hermitian(V, "V")
    if kind in ("qre", "petz"):
        alpha = None if kind == "qre" else float(param)
        return SpectralDivergence(kind, X, Y, alpha).directional(H, V, k)
    g, sign = _trace_fn(kind, param)
    return sign * float(np.real(np.trace(persp_deriv(g, X, Y, H, V, k))))


def _pairwise(g: OpConcaveFn, X: np.ndarray, Y: np.ndarray, tol: float) -> float:
    lam, U = scipy.linalg.eigh(X)
    mu, W = scipy.linalg.eigh(Y)
    lam = np.where(lam <= tol * max(1.0, lam[-1]), 0.0, lam)
    mu = np.where(mu <= tol * max(1.0, mu[-1]), 0.0, mu)
    overlap = np.abs(U.conj().T @ W) ** 2
    mask = overlap > (10.0 * tol) ** 2
    kappa = g.perspective_value(lam[:, None] * np.ones_like(overlap), mu[None, :] * np.ones_like(overlap))
    terms = np.where(mask, kappa * overlap, 0.0)
    if np.any(mask & np.isneginf(kappa)):
        return -np.inf
    return float(terms.sum())


def regularized_value(g: OpConcaveFn, X: np.ndarray, Y: np.ndarray, eps: float) -> float:
    """Q_g(X + eps I | Y + eps I) = sum_ij kappa(l_i, m_j) |<u_i, v_j>|^2 for PSD X, Y."""
    X, Y = hermitian(X, "X"), hermitian(Y, "Y")
    eye = np.eye(X.shape[0])
    return _pairwise(g, X + eps * eye, Y + eps * eye, 0.0)


def boundary_trace_value(g: OpConcaveFn, X: np.ndarray, Y: np.ndarray, tol: float) -> float:
    """Pairwise value at eps = 0; eigenvalues below tol (relative) count as zero, -inf when divergent."""
    return _pairwise(g, hermitian(X, "X"), hermitian(Y, "Y"), tol)


def _range_basis(X: np.ndarray, tol: float) -> np.ndarray:
    lam, U = scipy.linalg.eigh(X)
    return U[:, lam > tol * max(1.0, abs(lam[-1]))]


def _extended_persp(kappa: Callable[[np.ndarray], np.ndarray], A: np.ndarray, B: np.ndarray, tol: float) -> np.ndarray:
    """A^{1/2} h(A^{-1/2} B A^{-1/2}) A^{1/2} for A > 0, B >= 0, with h evaluated through its limit at 0."""
    inv_root, root = _inv_sqrt_and_sqrt(A)
    t, U = scipy.linalg.eigh(symmetrize(inv_root @ B @ inv_root))
    t = np.where(t <= tol * max(1.0, abs(t[-1])), 0.0, t)
    values = kappa(t)
    if np.any(np.isneginf(values)):
        return np.full(A.shape, -np.inf, dtype=complex)
    return symmetrize(root @ ((U * values) @ U.conj().T) @ root)


def boundary_persp(g: OpConcaveFn, X: np.ndarray, Y: np.ndarray, tol: float) -> np.ndarray:
    """Value of P_g at a PSD boundary pair by compression onto the relevant range.

    Assumes (X, Y) lies in the domain of the function's limit class. Case (i) returns the
    perspective at (X + eps I, Y + eps I) on range(X + Y), eps = sqrt(tol) * scale, which bounds
    the limit from above. Entries are -inf when the compressed value diverges.
    """
    X, Y = hermitian(X, "X"), hermitian(Y, "Y")
    n = X.shape[0]
    case = domain_case(g)

    def g_of(t: np.ndarray) -> np.ndarray:
        return g.perspective_value(np.ones_like(t), t)

    def g_hat_of(t: np.ndarray) -> np.ndarray:
        return g.perspective_value(t, np.ones_like(t))

    if case == "ii":
        basis = _range_basis(Y, tol)
    elif case == "i":
        basis = _range_basis(X + Y, tol)
    else:
        basis = _range_basis(X, tol)
    out = np.zeros((n, n), dtype=complex)
    if basis.shape[1] == 0:
        return out
    Xt = symmetrize(basis.conj().T @ X @ basis)
    Yt = symmetrize(basis.conj().T @ Y @ basis)
    if case == "ii":
        inner = _extended_persp(g_hat_of, Yt, Xt, tol)
    elif case == "i":
        scale = max(1.0, float(np.abs(scipy.linalg.eigvalsh(Xt + Yt)).max()))
        eps = math.sqrt(tol) * scale
        shifted = np.eye(basis.shape[1]) * eps
        inner = persp(g, Xt + shifted, Yt + shifted)
    else:
        inner = _extended_persp(g_of, Xt, Yt, tol)
    if np.any(np.isneginf(inner.real)):
        return np.full((n, n), -np.inf, dtype=complex)
    return symmetrize(basis @ inner @ basis.conj().T)
