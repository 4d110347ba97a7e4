from __future__ import annotations

import math

import numpy as np
import pytest

from qrecone.errors import ConcavityError, MeasureError
from qrecone.hermitian import SQRT, SQUARE
from qrecone.opfun import (
    DEFAULT_NODES,
    RESIDUAL_TOL,
    OpConcaveFn,
    QuadMeasure,
    build_measure,
    catalog,
    custom_fn,
    domain_case,
    one_minus_alpha_pow,
    transpose_fn,
    validate_measure,
)


@pytest.mark.parametrize("name", ["log", "pow:0.5", "negpow:-0.5"])
def test_catalog_measures_meet_residual_tolerance(name):
    g = catalog(name)
    assert g.measure.max_residual <= RESIDUAL_TOL
    assert np.all(g.measure.weights > 0)
    grid = np.geomspace(*g.measure.validated_range, 37)
    exact = g.eval(grid)
    approx = g.measure.represent(grid, g.g1, g.gp1)
    assert np.max(np.abs(exact - approx) / (1 + np.abs(exact))) <= RESIDUAL_TOL


def test_log_measure_uses_default_node_budget():
    assert catalog("log").measure.count <= DEFAULT_NODES


def test_closed_form_atoms():
    inv = catalog("negpow:-1")
    assert inv.measure.count == 1
    x = np.array([0.5, 2.0, 7.0])
    np.testing.assert_allclose(inv.measure.represent(x, inv.g1, inv.gp1), -1 / x)
    square = catalog("negpow:2")
    np.testing.assert_allclose(square.measure.represent(x, square.g1, square.gp1), -(x**2))


@pytest.mark.parametrize("name", ["pow:1.5", "pow:-0.5", "negpow:0.5", "negpow:3", "sym_negpow:0.5"])
def test_non_operator_concave_parameters_are_rejected(name):
    with pytest.raises(ConcavityError):
        catalog(name)


def test_unknown_family_is_rejected():
    with pytest.raises(ValueError):
        catalog("exp")


def test_transpose_of_log():
    t = transpose_fn(catalog("log"))
    assert t.name == "transpose:log"
    assert t.eval(np.array([2.0]))[0] == pytest.approx(-2 * math.log(2))
    assert (t.g1, t.gp1) == (0.0, -1.0)
    assert transpose_fn(t).name == "log"
    assert catalog("transpose:log").measure.max_residual <= RESIDUAL_TOL


@pytest.mark.parametrize(
    ("name", "case"),
    [("log", "ii"), ("pow:0.5", "i"), ("transpose:log", "iii"), ("negpow:-0.5", "ii")],
)
def test_domain_cases(name, case):
    assert domain_case(catalog(name)) == case


def test_case_iv_needs_both_limits_infinite():
    g = OpConcaveFn("edge", "custom", None, SQRT, 1.0, 0.5, -math.inf, -math.inf, QuadMeasure.empty())
    assert domain_case(g) == "iv"


def test_one_minus_alpha_pow_families():
    assert one_minus_alpha_pow(0.5).name == "pow:0.5"
    assert one_minus_alpha_pow(1.5).name == "negpow:-0.5"
    with pytest.raises(ConcavityError):
        one_minus_alpha_pow(3.5)


def test_measure_widens_by_decades_for_extreme_ratios():
    g = catalog("log")
    wide = g.measure_for(2e-5, 5e4)
    assert wide.covers(2e-5, 5e4)
    assert wide.max_residual <= RESIDUAL_TOL
    assert g.measure_for(0.1, 10.0) is g.measure
    with pytest.raises(MeasureError):
        g.measure_for(1e-14, 1.0)


def test_custom_function_validation():
    root = custom_fn("my_sqrt", SQRT, 1.0, 0.5, (0.0, 0.0), catalog("pow:0.5").measure)
    assert domain_case(root) == "i"
    with pytest.raises(MeasureError):
        root.measure_for(1e-6, 1.0)
    with pytest.raises(ConcavityError):
        custom_fn("square", SQUARE, 1.0, 2.0, (0.0, math.inf), QuadMeasure.empty())


def test_validate_measure_reports_residual():
    with pytest.raises(MeasureError) as info:
        validate_measure(catalog("log"), QuadMeasure.empty())
    assert info.value.max_residual > 1.0


def test_perspective_value_limits():
    g = catalog("log")
    out = g.perspective_value(np.array([1.0, 0.0, 2.0]), np.array([0.0, 3.0, 2.0]))
    assert out[0] == -np.inf
    assert out[1] == 0.0
    assert out[2] == pytest.approx(0.0)


def test_build_measure_with_more_nodes():
    g = catalog("pow:0.5")
    measure = build_measure(g, nodes=80)
    assert measure.max_residual <= RESIDUAL_TOL
    assert np.all(np.diff(measure.nodes) >= 0)
    assert measure.nodes[0] >= 0.0 and measure.nodes[-1] <= 1.0


@pytest.mark.parametrize("name", ["log", "pow:0.5", "negpow:-0.5"])
def test_transpose_is_an_involution(name):
    g = catalog(name)
    x = np.geomspace(1e-3, 1e3, 25)
    np.testing.assert_allclose(transpose_fn(transpose_fn(g)).eval(x), g.eval(x), rtol=1e-12)
    np.testing.assert_allclose(transpose_fn(g).eval(x), x * g.eval(1.0 / x), rtol=1e-12, atol=1e-14)


def test_measure_mass_matches_curvature_at_one():
    # g''(1) = -2 * mass
    assert catalog("log").measure.mass == pytest.approx(0.5, abs=1e-3)
    assert catalog("negpow:-1").measure.mass == pytest.approx(1.0, abs=1e-12)
