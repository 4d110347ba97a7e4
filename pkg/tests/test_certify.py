from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import pytest

from qrecone.barriers import BarrierEval, EpiDBS, EpiQRE, HypoQalpha, PSDCone, TracePerspHypo, parse_cone
from qrecone.certify import (
    check_compat,
    check_nu,
    check_sc,
    check_sc_logdet,
    check_tensor_identity,
    lb_certificate,
)


def test_logdet_self_concordance_is_tight_on_rank_one_directions():
    report = check_sc_logdet(3, samples=200, seed=1, rank_one=True)
    assert report.passed
    assert report.best == pytest.approx(1.0, abs=1e-8)
    assert report.worst == pytest.approx(1.0, abs=1e-8)


def test_logdet_self_concordance_general_directions():
    report = check_sc_logdet(3, samples=200, seed=2)
    assert report.passed
    assert report.worst <= 1.0


@pytest.mark.parametrize("cone", [EpiQRE(2), HypoQalpha(2, 0.5), EpiDBS(2)], ids=lambda c: c.spec)
def test_self_concordance_by_hessian_differences(cone):
    report = check_sc(cone, samples=5, seed=3)
    assert report.passed, report.summary()
    assert report.worst > 0.0


@pytest.mark.parametrize("cone", [EpiQRE(2), EpiDBS(2), TracePerspHypo(2)], ids=lambda c: c.spec)
def test_barrier_parameter_equals_nu(cone):
    report = check_nu(cone, samples=5, seed=4)
    assert report.passed, report.summary()
    assert report.worst == pytest.approx(cone.nu, rel=1e-6)


def test_compatibility_of_xi():
    report = check_compat(n=2, samples=20, seed=5)
    assert report.passed, report.witness


def test_compatibility_of_tensor_lift():
    report = check_compat(n=2, samples=5, seed=6, tensor=True)
    assert report.passed, report.witness
    assert report.target == "tensor:2x2"


def test_tensor_identities():
    report = check_tensor_identity(n=3, samples=20, seed=7)
    assert report.passed
    assert report.worst <= 1e-10


@pytest.mark.parametrize(
    ("spec", "m", "bound"),
    [
        ("epi_qre", None, 4 / (3 * 1e-4 + 1) + 1),
        ("hypo_qalpha:0.5", None, 4 / (3 * 1e-4 + 1) + 1),
        ("trace_persp_hypo:log", None, 3 / (2 * 1e-4 + 1) + 1),
        ("op_persp_hypo:log:identity", 2, 4 / (3 * 1e-4 + 1) + 2),
    ],
)
def test_lower_bound_certificates(spec, m, bound):
    cert = lb_certificate(parse_cone(spec, 2, m), eps=1e-4)
    assert cert.valid, cert.failed_premises
    assert cert.bound == pytest.approx(bound)
    assert cert.bound <= parse_cone(spec, 2, m).nu
    assert "=" in cert.formula()


def test_lower_bound_needs_a_hypograph_form():
    with pytest.raises(ValueError):
        lb_certificate(parse_cone("psd", 2))
    with pytest.raises(ValueError):
        lb_certificate(EpiQRE(2), eps=1.5)


def test_report_serializes_to_json():
    report = check_tensor_identity(n=2, samples=3)
    data = json.loads(json.dumps(report.to_dict()))
    assert data["check"] == "tensor"
    assert report.summary().startswith("PASS")


NU_SPECS = [
    "psd",
    "epi_qre",
    "hypo_qalpha:0.5",
    "epi_qalpha:1.5",
    "epi_dbs",
    "hypo_qhat:0.5",
    "epi_qhat:2",
    "op_persp_hypo:log:trace",
    "op_persp_hypo:pow:0.5:identity",
    "trace_persp_hypo:log",
]


def _kraus_cone(n: int):
    twist = np.arange(n * n, dtype=float).reshape(n, n) / (n * n)
    return parse_cone("op_persp_hypo:log:kraus", n, params={"kraus": [np.eye(n), twist]})


def _every_cone(n: int) -> list:
    return [parse_cone(spec, n) for spec in NU_SPECS] + [_kraus_cone(n)]


@pytest.mark.parametrize("cone", _every_cone(2) + _every_cone(3), ids=lambda c: f"{c.spec}-n{c.n}")
def test_barrier_parameter_is_attained_on_every_cone(cone):
    report = check_nu(cone, samples=3, seed=11)
    assert report.passed, report.summary()
    assert report.worst == pytest.approx(cone.nu, rel=1e-6)
    assert report.best == pytest.approx(cone.nu, rel=1e-6)


@pytest.mark.parametrize("cone", _every_cone(2), ids=lambda c: c.spec)
def test_self_concordance_on_every_cone(cone):
    report = check_sc(cone, samples=3, seed=12)
    assert report.passed, report.summary()
    assert report.worst <= 1.0 + 1e-3


@dataclass(frozen=True)
class _HalfLogdet(PSDCone):
    """-1/2 logdet X keeps the Euler direction but has g^T H^{-1} g = n / 2."""

    def barrier(self, pt, order=2, block=None):
        ev = super().barrier(pt, order, block)
        return BarrierEval(
            0.5 * ev.value,
            None if ev.grad is None else 0.5 * ev.grad,
            None if ev.hess is None else 0.5 * ev.hess,
        )


def test_barrier_parameter_below_nu_fails():
    report = check_nu(_HalfLogdet(2), samples=3, seed=13)
    assert not report.passed
    assert report.best == pytest.approx(1.0, rel=1e-8)
    assert report.worst == pytest.approx(1.0, rel=1e-8)


def test_compatibility_margin_is_absolute():
    report = check_compat(n=3, samples=10, seed=14)
    assert report.passed, report.witness
    assert report.worst <= 1e-9
    tensor = check_compat(n=2, samples=3, seed=15, tensor=True)
    assert tensor.passed, tensor.witness
    assert tensor.worst <= 1e-9
