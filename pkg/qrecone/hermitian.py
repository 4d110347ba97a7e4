from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
import scipy.linalg

from .divdiff_backend import resolve_divdiff_kernels
from .errors import DomainError, InfeasiblePointError, NotHermitianError

logger = logging.getLogger(__name__)

HERM_RTOL = 1e-10
EPS_PD = 1e-12
SQRT2 = float(np.sqrt(2.0))

ArrayFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ScalarFn:
    """A real function with two derivatives, applied elementwise to eigenvalues."""

    name: str
    f: ArrayFn
    df: ArrayFn
    d2f: ArrayFn
    positive_domain: bool = True

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.f(x)


def power_fn(p: float) -> ScalarFn:
    if p == 1.0:
        return IDENTITY
    return ScalarFn(
        name=f"x^{p:g}",
        f=lambda x: np.power(x, p),
        df=lambda x: p * np.power(x, p - 1.0),
        d2f=lambda x: p * (p - 1.0) * np.power(x, p - 2.0),
        positive_domain=not float(p).is_integer() or p < 0,
    )


LOG = ScalarFn("log", np.log, lambda x: 1.0 / x, lambda x: -1.0 / (x * x))
IDENTITY = ScalarFn("x", lambda x: np.asarray(x, dtype=float), np.ones_like, np.zeros_like, positive_domain=False)
SQUARE = ScalarFn("x^2", lambda x: x * x, lambda x: 2.0 * x, lambda x: 2.0 * np.ones_like(x), positive_domain=False)
SQRT = power_fn(0.5)


@dataclass(frozen=True)
class SpectralDecomp:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    def to_eigenbasis(self, H: np.ndarray) -> np.ndarray:
        U = self.eigenvectors
        return U.conj().T @ H @ U

    def from_eigenbasis(self, M: np.ndarray) -> np.ndarray:
        U = self.eigenvectors
        return symmetrize(U @ M @ U.conj().T)

    def reconstruct(self) -> np.ndarray:
        return self.from_eigenbasis(np.diag(self.eigenvalues).astype(complex))

    def lambda_min(self) -> float:
        return float(self.eigenvalues[0])

    def lambda_max(self) -> float:
        return float(self.eigenvalues[-1])


def symmetrize(X: np.ndarray) -> np.ndarray:
    return 0.5 * (X + X.conj().T)


def hermitian(X: np.ndarray | list, name: str = "matrix", rtol: float = HERM_RTOL) -> np.ndarray:
    """Validate and return a complex128 copy of X made exactly Hermitian."""
    A = np.array(X, dtype=np.complex128)
    if A.ndim == 0:
        A = A.reshape(1, 1)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {A.shape}")
    scale = float(np.linalg.norm(A))
    asymmetry = float(np.linalg.norm(A - A.conj().T))
    if asymmetry > rtol * scale:
        raise NotHermitianError(name, asymmetry, scale)
    return symmetrize(A)


def spectral(X: np.ndarray) -> SpectralDecomp:
    A = hermitian(X)
    lam, U = scipy.linalg.eigh(A)
    return SpectralDecomp(np.asarray(lam, dtype=float), U)


def _checked_values(S: SpectralDecomp, g: ScalarFn, values: np.ndarray) -> np.ndarray:
    lam = S.eigenvalues
    if g.positive_domain and lam.size and lam[0] <= 0.0:
        raise DomainError(g.name, float(lam[0]))
    bad = ~np.isfinite(values)
    if np.any(bad):
        raise DomainError(g.name, float(lam[np.argmax(bad)]))
    return values


def apply_fn(S: SpectralDecomp, g: ScalarFn | ArrayFn) -> np.ndarray:
    if isinstance(g, ScalarFn):
        values = _checked_values(S, g, np.asarray(g.f(S.eigenvalues), dtype=float))
    else:
        values = np.asarray(g(S.eigenvalues), dtype=float)
        if not np.all(np.isfinite(values)):
            raise DomainError(getattr(g, "__name__", "g"), float(S.eigenvalues[np.argmax(~np.isfinite(values))]))
    U = S.eigenvectors
    return symmetrize((U * values) @ U.conj().T)


def first_difference_table(S: SpectralDecomp, g: ScalarFn) -> np.ndarray:
    lam = S.eigenvalues
    f = _checked_values(S, g, np.asarray(g.f(lam), dtype=float))
    df = _checked_values(S, g, np.asarray(g.df(lam), dtype=float))
    kernels = resolve_divdiff_kernels()
    return np.asarray(kernels.first_divided_differences(lam, f, df))


def second_difference_table(S: SpectralDecomp, g: ScalarFn) -> np.ndarray:
    lam = S.eigenvalues
    f = _checked_values(S, g, np.asarray(g.f(lam), dtype=float))
    df = _checked_values(S, g, np.asarray(g.df(lam), dtype=float))
    d2f = _checked_values(S, g, np.asarray(g.d2f(lam), dtype=float))
    kernels = resolve_divdiff_kernels()
    return np.asarray(kernels.second_divided_differences(lam, f, df, d2f))


def frechet1(S: SpectralDecomp, g: ScalarFn, H: np.ndarray, table: np.ndarray | None = None) -> np.ndarray:
    """Derivative of X -> g(X) at the decomposed point along H (Daleckii-Krein)."""
    if table is None:
        table = first_difference_table(S, g)
    return S.from_eigenbasis(table * S.to_eigenbasis(H))


def frechet2(
    S: SpectralDecomp, g: ScalarFn, H: np.ndarray, K: np.ndarray, table: np.ndarray | None = None
) -> np.ndarray:
    """Second derivative D^2 g(X)[H, K] in the eigenbasis: sum_k g[l_i, l_k, l_j](H_ik K_kj + K_ik H_kj)."""
    if table is None:
        table = second_difference_table(S, g)
    Ht = S.to_eigenbasis(H)
    Kt = S.to_eigenbasis(K)
    M = np.einsum("ikj,ik,kj->ij", table, Ht, Kt) + np.einsum("ikj,ik,kj->ij", table, Kt, Ht)
    return S.from_eigenbasis(M)


def kron(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return np.kron(A, B)


def conj(A: np.ndarray) -> np.ndarray:
    return np.conj(A)


def psi_apply(Z: np.ndarray) -> float:
    """psi* Z psi with psi the column-stacked identity, so that Psi(X kron conj(Y)) = tr(XY)."""
    Z = np.asarray(Z)
    if Z.ndim != 2 or Z.shape[0] != Z.shape[1]:
        raise ValueError(f"Psi expects a square matrix, got shape {Z.shape}")
    n = int(round(np.sqrt(Z.shape[0])))
    if n * n != Z.shape[0]:
        raise ValueError(f"Psi expects dimension n^2, got {Z.shape[0]}")
    idx = np.arange(n) * (n + 1)
    return float(np.real(Z[np.ix_(idx, idx)].sum()))


@lru_cache(maxsize=None)
def _upper_indices(n: int) -> tuple[np.ndarray, np.ndarray]:
    rows = [i for j in range(n) for i in range(j)]
    cols = [j for j in range(n) for _ in range(j)]
    return np.array(rows, dtype=int), np.array(cols, dtype=int)


def hvec(A: np.ndarray) -> np.ndarray:
    """Real isometric coordinates: diagonal, then sqrt(2)*(Re, Im) of the strict upper triangle, column-major."""
    A = np.asarray(A)
    n = A.shape[0]
    rows, cols = _upper_indices(n)
    upper = A[rows, cols]
    pairs = np.stack([upper.real, upper.imag], axis=-1).ravel() * SQRT2
    return np.concatenate([np.real(np.diag(A)), pairs])


def hmat(v: np.ndarray, n: int) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (n * n,):
        raise ValueError(f"expected {n * n} coordinates for a {n}x{n} Hermitian matrix, got {v.shape}")
    rows, cols = _upper_indices(n)
    A = np.zeros((n, n), dtype=np.complex128)
    A[np.diag_indices(n)] = v[:n]
    upper = (v[n::2] + 1j * v[n + 1 :: 2]) / SQRT2
    A[rows, cols] = upper
    A[cols, rows] = np.conj(upper)
    return A


@lru_cache(maxsize=None)
def _basis(n: int) -> np.ndarray:
    eye = np.eye(n * n)
    basis = np.stack([hmat(eye[k], n) for k in range(n * n)])
    basis.setflags(write=False)
    return basis


def hvec_basis(n: int) -> np.ndarray:
    """Orthonormal Hermitian basis E_a with hvec(E_a) = e_a, shape (n^2, n, n)."""
    return _basis(n)


def hvec_batch(stack: np.ndarray) -> np.ndarray:
    """hvec applied to each matrix of a (k, n, n) stack, giving (k, n^2)."""
    n = stack.shape[-1]
    rows, cols = _upper_indices(n)
    diag = np.real(np.diagonal(stack, axis1=-2, axis2=-1))
    upper = stack[:, rows, cols]
    pairs = np.stack([upper.real, upper.imag], axis=-1).reshape(stack.shape[0], -1) * SQRT2
    return np.concatenate([diag, pairs], axis=1)


def is_pd(X: np.ndarray, eps: float = EPS_PD) -> bool:
    lam = scipy.linalg.eigvalsh(X)
    return bool(np.all(np.isfinite(lam)) and lam[0] > eps * max(1.0, lam[-1]))


def require_pd(X: np.ndarray, component: str, eps: float = EPS_PD) -> None:
    lam = scipy.linalg.eigvalsh(X)
    if not (np.all(np.isfinite(lam)) and lam[0] > eps * max(1.0, lam[-1])):
        raise InfeasiblePointError(component, f"lambda_min = {lam[0]:.3e}")


def cholesky(X: np.ndarray, component: str = "matrix") -> np.ndarray:
    try:
        return scipy.linalg.cholesky(X, lower=True)
    except np.linalg.LinAlgError as exc:
        raise InfeasiblePointError(component, "Cholesky factorization failed") from exc


def inv_pd(X: np.ndarray) -> np.ndarray:
    L = cholesky(X)
    Linv = scipy.linalg.solve_triangular(L, np.eye(X.shape[0]), lower=True)
    return symmetrize(Linv.conj().T @ Linv)


def sqrt_psd(X: np.ndarray) -> np.ndarray:
    lam, U = scipy.linalg.eigh(X)
    return symmetrize((U * np.sqrt(np.clip(lam, 0.0, None))) @ U.conj().T)


def logdet(X: np.ndarray) -> float:
    L = cholesky(X)
    return float(2.0 * np.sum(np.log(np.real(np.diag(L)))))


def logdet_derivs(X: np.ndarray, H: np.ndarray, k: int) -> float:
    """k-th directional derivative of -logdet at X along H (k = 0 gives the value)."""
    if k not in (0, 1, 2, 3):
        raise ValueError(f"derivative order must be 0..3, got {k}")
    X = hermitian(X, "X")
    require_pd(X, "X")
    if k == 0:
        return -logdet(X)
    L = cholesky(X)
    W = scipy.linalg.solve_triangular(L, hermitian(H, "H"), lower=True)
    A = symmetrize(scipy.linalg.solve_triangular(L, W.conj().T, lower=True))
    if k == 1:
        return -float(np.real(np.trace(A)))
    if k == 2:
        return float(np.real(np.vdot(A, A)))
    return -2.0 * float(np.real(np.trace(A @ A @ A)))


def congruence_stack(L: np.ndarray, stack: np.ndarray) -> np.ndarray:
    """L^{-1} E L^{-*} for every E in the stack."""
    Linv = scipy.linalg.solve_triangular(L, np.eye(L.shape[0]), lower=True)
    return Linv[None] @ stack @ Linv.conj().T[None]


def logdet_hessian(X: np.ndarray) -> np.ndarray:
    """Hessian of -logdet at X in hvec coordinates: H_ab = tr(X^-1 E_a X^-1 E_b)."""
    n = X.shape[0]
    W = hvec_batch(congruence_stack(cholesky(X), hvec_basis(n)))
    return W @ W.T


def range_projector(X: np.ndarray, tol: float) -> np.ndarray:
    lam, U = scipy.linalg.eigh(hermitian(X))
    thresh = tol * max(1.0, abs(lam[-1]) if lam.size else 1.0)
    Ur = U[:, lam > thresh]
    return Ur @ Ur.conj().T


def kernel_contained(X: np.ndarray, Y: np.ndarray, tol: float) -> bool:
    """True when ker Y is contained in ker X (X << Y), measured as ||(I - P_Y) P_X|| <= 10 tol."""
    n = X.shape[0]
    P_X = range_projector(X, tol)
    P_Y = range_projector(Y, tol)
    return bool(np.linalg.norm((np.eye(n) - P_Y) @ P_X, 2) <= 10.0 * tol)


def random_hermitian(rng: np.random.Generator, n: int) -> np.ndarray:
    G = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return symmetrize(G) / np.sqrt(2.0)


def random_pd(rng: np.random.Generator, n: int, shift: float = 1e-3) -> np.ndarray:
    A = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2.0)
    return symmetrize(A @ A.conj().T + shift * np.eye(n))
