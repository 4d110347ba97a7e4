from __future__ import annotations

import numpy as np
import pytest

from qrecone.errors import DomainError, InfeasiblePointError, NotHermitianError
from qrecone.hermitian import (
    LOG,
    SQRT,
    apply_fn,
    frechet1,
    frechet2,
    hermitian,
    hmat,
    hvec,
    hvec_basis,
    kernel_contained,
    logdet,
    logdet_derivs,
    logdet_hessian,
    psi_apply,
    random_hermitian,
    random_pd,
    require_pd,
    spectral,
)


def test_hvec_is_an_isometry(rng):
    A, B = random_hermitian(rng, 3), random_hermitian(rng, 3)
    assert hvec(A) @ hvec(B) == pytest.approx(float(np.real(np.trace(A @ B))), abs=1e-12)
    np.testing.assert_allclose(hmat(hvec(A), 3), A, atol=1e-14)


def test_hvec_basis_matches_unit_vectors():
    basis = hvec_basis(3)
    assert basis.shape == (9, 3, 3)
    np.testing.assert_allclose(np.array([hvec(E) for E in basis]), np.eye(9), atol=1e-14)


def test_hermitian_rejects_asymmetric_input():
    with pytest.raises(NotHermitianError):
        hermitian(np.array([[1.0, 2.0], [0.0, 1.0]]), "X")
    with pytest.raises(ValueError):
        hermitian(np.ones((2, 3)))


def test_apply_fn_checks_the_domain():
    with pytest.raises(DomainError) as info:
        apply_fn(spectral(np.diag([1.0, -0.5])), LOG)
    assert info.value.eigenvalue == pytest.approx(-0.5)


def test_apply_fn_matches_eigen_definition(rng):
    X = random_pd(rng, 3)
    root = apply_fn(spectral(X), SQRT)
    np.testing.assert_allclose(root @ root, X, atol=1e-10)


def test_frechet1_matches_central_difference(rng):
    X, H = random_pd(rng, 3) + np.eye(3), random_hermitian(rng, 3)
    t = 1e-5
    fd = (apply_fn(spectral(X + t * H), LOG) - apply_fn(spectral(X - t * H), LOG)) / (2 * t)
    np.testing.assert_allclose(frechet1(spectral(X), LOG, H), fd, atol=1e-7)


def test_frechet2_matches_difference_of_first_derivatives(rng):
    X = random_pd(rng, 3) + np.eye(3)
    H, K = random_hermitian(rng, 3), random_hermitian(rng, 3)
    t = 1e-5
    fd = (frechet1(spectral(X + t * K), LOG, H) - frechet1(spectral(X - t * K), LOG, H)) / (2 * t)
    np.testing.assert_allclose(frechet2(spectral(X), LOG, H, K), fd, atol=1e-6)


def test_logdet_derivatives_are_consistent(rng):
    X, H = random_pd(rng, 3) + np.eye(3), random_hermitian(rng, 3)
    t = 1e-5
    d1_fd = (logdet_derivs(X + t * H, H, 0) - logdet_derivs(X - t * H, H, 0)) / (2 * t)
    d3_fd = (logdet_derivs(X + t * H, H, 2) - logdet_derivs(X - t * H, H, 2)) / (2 * t)
    assert logdet_derivs(X, H, 1) == pytest.approx(d1_fd, rel=1e-6)
    assert logdet_derivs(X, H, 3) == pytest.approx(d3_fd, rel=1e-5)
    assert logdet_derivs(X, H, 0) == pytest.approx(-logdet(X))
    h = hvec(H)
    assert h @ logdet_hessian(X) @ h == pytest.approx(logdet_derivs(X, H, 2), rel=1e-10)


def test_logdet_derivs_rejects_bad_order(rng):
    with pytest.raises(ValueError):
        logdet_derivs(np.eye(2), np.eye(2), 4)


def test_psi_of_tensor_product_is_trace_of_product(rng):
    X, Y = random_hermitian(rng, 3), random_hermitian(rng, 3)
    assert psi_apply(np.kron(X, np.conj(Y))) == pytest.approx(float(np.real(np.trace(X @ Y))), abs=1e-12)


def test_require_pd_reports_component():
    with pytest.raises(InfeasiblePointError) as info:
        require_pd(np.diag([1.0, 0.0]), "Y")
    assert info.value.component == "Y"


def test_kernel_containment():
    X, Y = np.diag([1.0, 0.0]), np.eye(2)
    assert kernel_contained(X, Y, 1e-12)
    assert not kernel_contained(Y, X, 1e-12)
