from __future__ import annotations

import numpy as np
import pytest

from qrecone.barriers import (
    ConePoint,
    EpiDBS,
    EpiQRE,
    HypoQalpha,
    OpPerspHypo,
    PositiveMap,
    TracePerspHypo,
    barrier_eval,
    parse_cone,
)
from qrecone.errors import ConcavityError, InfeasiblePointError
from qrecone.hermitian import ScalarFn, random_hermitian, random_pd
from qrecone.opfun import OpConcaveFn, QuadMeasure, catalog, domain_case
from qrecone.perspective import persp_quad, regularized_value, trace_divergence

from .conftest import well_conditioned_pd, well_conditioned_point

CONE_SPECS = [
    ("psd", None),
    ("epi_qre", None),
    ("hypo_qalpha:0.5", None),
    ("epi_qalpha:1.5", None),
    ("epi_dbs", None),
    ("hypo_qhat:0.5", None),
    ("epi_qhat:2", None),
    ("op_persp_hypo:log:trace", None),
    ("op_persp_hypo:log:identity", 2),
    ("op_persp_hypo:pow:0.5:identity", 2),
    ("trace_persp_hypo:log", None),
]


@pytest.fixture(params=CONE_SPECS, ids=[spec for spec, _ in CONE_SPECS])
def cone(request):
    spec, m = request.param
    return parse_cone(spec, 2, m)


def test_gradient_matches_value_differences(cone, rng):
    v = well_conditioned_point(cone, rng)
    d = rng.standard_normal(cone.dim)
    t = 1e-6
    fd = (cone.barrier(v + t * d, 0).value - cone.barrier(v - t * d, 0).value) / (2 * t)
    assert cone.barrier(v, 1).grad @ d == pytest.approx(fd, rel=1e-5, abs=1e-7)


def test_hessian_matches_gradient_differences(cone, rng):
    v = well_conditioned_point(cone, rng)
    d = rng.standard_normal(cone.dim)
    t = 1e-6
    fd = (cone.barrier(v + t * d, 1).grad - cone.barrier(v - t * d, 1).grad) / (2 * t)
    hess = cone.barrier(v, 2).hess
    np.testing.assert_allclose(hess @ d, fd, rtol=1e-5, atol=1e-6)
    np.testing.assert_allclose(hess, hess.T, atol=1e-12)
    assert np.linalg.eigvalsh(hess)[0] > 0.0


def test_logarithmic_homogeneity(cone, rng):
    v = well_conditioned_point(cone, rng)
    ev = cone.barrier(v, 2)
    assert ev.grad @ v == pytest.approx(-cone.nu, rel=1e-8)
    np.testing.assert_allclose(ev.hess @ v, -ev.grad, atol=1e-7 * max(1.0, np.abs(ev.grad).max()))


def test_feasible_start_is_interior_and_in_closure(cone):
    start = cone.feasible_start()
    assert cone.interior(start)
    assert cone.closure_member(start)
    np.testing.assert_allclose(cone.to_vector(cone.from_vector(cone.to_vector(start))), cone.to_vector(start))


def test_parameters_follow_the_cone_shape():
    assert EpiQRE(3).nu == 7.0
    assert EpiQRE(3).dim == 19
    assert TracePerspHypo(3).nu == 5.0
    op = parse_cone("op_persp_hypo:log:identity", 3)
    assert (op.m, op.nu, op.dim) == (3, 9.0, 27)


def test_epi_qre_barrier_value(rng):
    X, Y = well_conditioned_pd(rng, 2), well_conditioned_pd(rng, 2)
    z = trace_divergence("qre", X, Y) + 0.5
    value = EpiQRE(2).barrier(ConePoint(X, Y, z), 0).value
    expected = -np.log(0.5) - np.log(np.linalg.det(X).real) - np.log(np.linalg.det(Y).real)
    assert value == pytest.approx(expected, rel=1e-12)


def test_closure_and_interior_for_epigraph(rng):
    cone = EpiQRE(2)
    X, Y = well_conditioned_pd(rng, 2), well_conditioned_pd(rng, 2)
    d = trace_divergence("qre", X, Y)
    assert cone.closure_member(ConePoint(X, Y, d - 1e-12))
    assert not cone.interior(ConePoint(X, Y, d - 1e-12))
    assert cone.interior(ConePoint(X, Y, d + 1e-6))
    assert not cone.closure_member(ConePoint(X, Y, d - 0.5))
    # X << Y fails: the relative entropy is +inf
    assert not cone.closure_member(ConePoint(np.eye(2), np.diag([1.0, 0.0]), 100.0))
    assert cone.closure_member(ConePoint(np.diag([1.0, 0.0]), np.eye(2), 0.0))


def test_spectral_and_quadrature_routes_agree_for_commuting_pairs():
    X, Y = np.diag([0.7, 0.3]).astype(complex), np.diag([0.4, 0.6]).astype(complex)
    qre = EpiQRE(2).h_oracle(X, Y, 0)[0]
    dbs = EpiDBS(2).h_oracle(X, Y, 0)[0]
    assert dbs == pytest.approx(qre, rel=1e-8)


def test_operator_trace_cone_matches_dbs_epigraph(rng):
    X, Y = well_conditioned_pd(rng, 2), well_conditioned_pd(rng, 2)
    z = trace_divergence("bs", X, Y) + 0.7
    dbs = EpiDBS(2).barrier(ConePoint(X, Y, z), 2)
    op = parse_cone("op_persp_hypo:log:trace", 2).barrier(ConePoint(X, Y, np.array([[-z]])), 2)
    flip = np.ones(dbs.grad.size)
    flip[-1] = -1.0
    assert op.value == pytest.approx(dbs.value, rel=1e-9)
    np.testing.assert_allclose(op.grad, flip * dbs.grad, atol=1e-8)
    np.testing.assert_allclose(op.hess, np.outer(flip, flip) * dbs.hess, atol=1e-7)


def test_infeasible_point_names_block_and_component(rng):
    cone = EpiQRE(2)
    with pytest.raises(InfeasiblePointError) as info:
        cone.barrier(ConePoint(np.diag([1.0, -1.0]), np.eye(2), 1.0), 0, block=3)
    assert info.value.block == 3
    assert info.value.component == "X"
    with pytest.raises(InfeasiblePointError) as info:
        HypoQalpha(2, 0.5).barrier(ConePoint(np.eye(2), np.eye(2), 5.0), 0)
    assert info.value.component == "slack"


def test_parse_cone_errors():
    with pytest.raises(ValueError):
        parse_cone("epi_renyi", 2)
    with pytest.raises(ConcavityError):
        parse_cone("hypo_qalpha:1.5", 2)
    with pytest.raises(ConcavityError):
        parse_cone("epi_qalpha:0.5", 2)
    with pytest.raises(ValueError):
        parse_cone("op_persp_hypo:log:kraus", 2)
    with pytest.raises(ValueError):
        parse_cone("op_persp_hypo:log:identity", 2, m=3)


def test_kraus_map_adjoint(rng):
    kraus = (rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3)), rng.standard_normal((2, 3)))
    phi = PositiveMap("kraus", 2, kraus)
    assert phi.m == 3
    P, S = random_hermitian(rng, 2), random_hermitian(rng, 3)
    lhs = np.trace(phi.apply(P) @ S)
    rhs = np.trace(P @ phi.adjoint(S))
    assert lhs.real == pytest.approx(rhs.real, rel=1e-12)


def test_kraus_cone_barrier_gradient(rng):
    kraus = [rng.standard_normal((2, 3)) for _ in range(2)]
    cone = parse_cone("op_persp_hypo:log:kraus", 2, params={"kraus": kraus})
    X, Y = well_conditioned_pd(rng, 2), random_pd(rng, 2) + np.eye(2)
    P = cone.phi.apply(persp_quad(cone.g, X, Y))
    v = cone.to_vector(ConePoint(X, Y, P - np.eye(3)))
    d = rng.standard_normal(cone.dim)
    t = 1e-6
    fd = (cone.barrier(v + t * d, 0).value - cone.barrier(v - t * d, 0).value) / (2 * t)
    assert cone.barrier(v, 1).grad @ d == pytest.approx(fd, rel=1e-5, abs=1e-7)


def test_trace_perspective_scalar_coordinate(rng):
    cone = TracePerspHypo(2, catalog("log"))
    v = cone.to_vector(ConePoint(1.0, np.diag([2.0, 1.5]), 0.0))
    assert v[0] == 1.0 and v[-1] == 0.0
    assert cone.interior(v)
    assert not cone.interior(cone.to_vector(ConePoint(1.0, np.diag([2.0, 1.5]), 2.0)))


def test_barrier_eval_dispatches_to_the_cone(rng):
    cone = EpiQRE(2)
    v = well_conditioned_point(cone, rng)
    ev = barrier_eval(cone, v, 1)
    assert ev.hess is None
    assert ev.value == pytest.approx(cone.barrier(v, 0).value)
    with pytest.raises(ValueError):
        barrier_eval(cone, v, 3)


def test_kraus_map_needs_positive_definite_gram():
    with pytest.raises(ValueError, match="positive definite"):
        PositiveMap("kraus", 2, (np.array([[1.0], [0.0]]),))
    phi = PositiveMap("kraus", 2, (np.array([[1.0], [0.0]]), np.array([[0.0], [1.0]])))
    assert phi.m == 1


D2 = np.diag([1.0, 0.0])
E2 = np.diag([0.0, 1.0])
EYE2 = np.eye(2)
ZERO2 = np.zeros((2, 2))

CLOSURE_CASES = [
    ("epi_qre", ConePoint(D2, EYE2, 0.0), True),
    ("epi_qre", ConePoint(EYE2, D2, 100.0), False),
    ("epi_qre", ConePoint(ZERO2, ZERO2, 0.0), True),
    ("epi_qre", ConePoint(D2, 2 * D2, -np.log(2.0)), True),
    ("epi_qre", ConePoint(D2, 2 * D2, -np.log(2.0) - 1e-3), False),
    ("hypo_qalpha:0.5", ConePoint(ZERO2, ZERO2, 0.0), True),
    ("hypo_qalpha:0.5", ConePoint(ZERO2, ZERO2, 0.1), False),
    ("hypo_qalpha:0.5", ConePoint(D2, E2, 0.0), True),
    ("hypo_qalpha:0.5", ConePoint(D2, E2, 0.01), False),
    ("hypo_qalpha:0.5", ConePoint(D2, E2, -1.0), True),
    ("epi_dbs", ConePoint(EYE2, D2, 100.0), False),
    ("epi_dbs", ConePoint(D2, np.diag([2.0, 1.0]), 0.0), True),
    ("epi_dbs", ConePoint(D2, np.diag([2.0, 1.0]), -1.0), False),
    ("hypo_qhat:0.5", ConePoint(ZERO2, ZERO2, 0.0), True),
    ("hypo_qhat:0.5", ConePoint(ZERO2, ZERO2, 0.1), False),
    ("hypo_qhat:0.5", ConePoint(EYE2, EYE2, 2.0), True),
    ("hypo_qhat:0.5", ConePoint(EYE2, EYE2, 2.1), False),
    ("op_persp_hypo:transpose:log:identity", ConePoint(EYE2, D2, ZERO2), True),
    ("op_persp_hypo:transpose:log:identity", ConePoint(EYE2, D2, np.diag([0.1, 0.0])), False),
    ("op_persp_hypo:transpose:log:identity", ConePoint(D2, EYE2, -10.0 * EYE2), False),
]


@pytest.mark.parametrize(("spec", "pt", "member"), CLOSURE_CASES, ids=[f"{c[0]}-{i}" for i, c in enumerate(CLOSURE_CASES)])
def test_closure_on_the_boundary(spec, pt, member):
    m = 2 if spec.endswith(":identity") else None
    assert parse_cone(spec, 2, m).closure_member(pt) == member


def _both_limits_infinite() -> OpConcaveFn:
    # -x^1.5 - x^-0.5: g(0+) and x g(1/x) at 0+ are both -inf
    scalar = ScalarFn(
        "-x^1.5-x^-0.5",
        lambda x: -(x**1.5) - x**-0.5,
        lambda x: -1.5 * x**0.5 + 0.5 * x**-1.5,
        lambda x: -0.75 * x**-0.5 - 0.75 * x**-2.5,
    )
    return OpConcaveFn("sym_negpow:1.5", "custom", 1.5, scalar, -2.0, -1.0, -np.inf, -np.inf, QuadMeasure.empty())


def test_closure_needs_common_support_when_both_limits_diverge():
    cone = OpPerspHypo(2, _both_limits_infinite(), PositiveMap("identity", 2))
    assert domain_case(cone.g) == "iv"
    assert cone.closure_member(ConePoint(D2, D2, np.diag([-2.0, 0.0])))
    assert not cone.closure_member(ConePoint(D2, D2, np.diag([-1.9, 0.0])))
    assert not cone.closure_member(ConePoint(D2, EYE2, -10.0 * EYE2))
    assert not cone.closure_member(ConePoint(EYE2, D2, -10.0 * EYE2))


def test_regularized_value_diverges_off_the_support():
    # supp X not inside supp Y: Q_log(X + eps I | Y + eps I) ~ log(eps)
    value = regularized_value(catalog("log"), EYE2, D2, 1e-6)
    assert value <= -10.0
    assert regularized_value(catalog("log"), D2, EYE2, 1e-6) == pytest.approx(0.0, abs=1e-4)
