from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from qrecone.barriers import Cone, ConePoint, OpPerspHypo, PSDCone, ScalarSlackCone, TracePerspHypo
from qrecone.hermitian import random_pd, symmetrize
from qrecone.perspective import QuadraturePerspective

PROBLEMS_DIR = Path(__file__).resolve().parents[1] / "problems"


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def problems_dir() -> Path:
    return PROBLEMS_DIR


@pytest.fixture
def state_x0() -> np.ndarray:
    """Unit-trace state with spectrum (3/4, 1/4) and diagonal (1/2, 1/2)."""
    return np.array([[0.5, 0.15 + 0.2j], [0.15 - 0.2j, 0.5]])


def well_conditioned_pd(rng: np.random.Generator, n: int) -> np.ndarray:
    return symmetrize(random_pd(rng, n) / n + np.eye(n))


def well_conditioned_point(cone: Cone, rng: np.random.Generator, margin: float = 1.0) -> np.ndarray:
    """Interior point with eigenvalues in a narrow band and slack margin `margin`."""
    n = cone.n
    if isinstance(cone, PSDCone):
        return cone.to_vector(ConePoint(well_conditioned_pd(rng, n)))
    Y = well_conditioned_pd(rng, n)
    if isinstance(cone, TracePerspHypo):
        h = float(np.real(np.trace(QuadraturePerspective(cone.f, np.eye(n), Y).value)))
        return cone.to_vector(ConePoint(1.0, Y, h - margin))
    X = well_conditioned_pd(rng, n)
    if isinstance(cone, ScalarSlackCone):
        h = cone.h_oracle(X, Y, 0)[0]
        return cone.to_vector(ConePoint(X, Y, cone.sigma * (margin - h)))
    if isinstance(cone, OpPerspHypo):
        P = QuadraturePerspective(cone.g, X, Y).value
        return cone.to_vector(ConePoint(X, Y, symmetrize(cone.phi.apply(P) - margin * np.eye(cone.m))))
    raise ValueError(cone.spec)
