import math

import numpy as np
import pytest

from qlsu import CoefficientSpec, Constant, ProblemParams, SmoothBump, build_dual


def closed_form_s(g):
    """Inverse of the canonical dual transform, a(s) = 2 s^2 + 1."""
    g = np.asarray(g, dtype=float)
    return g * np.sqrt(2 * g * g + 1) / 2 + np.arcsinh(math.sqrt(2) * g) / (2 * math.sqrt(2))


@pytest.fixture(scope="session")
def canonical_spec():
    return CoefficientSpec(2, 2.0, Constant(1.0))


@pytest.fixture(scope="session")
def canonical_dt(canonical_spec):
    return build_dual(canonical_spec)


@pytest.fixture(scope="session")
def canonical_params(canonical_spec):
    return ProblemParams(3, 3.0, 4.0, canonical_spec)


@pytest.fixture(scope="session")
def bump3_spec():
    return CoefficientSpec(3, 1.0, SmoothBump(1.0, 1.0, 1.0))


@pytest.fixture(scope="session")
def bump3_dt(bump3_spec):
    return build_dual(bump3_spec)


@pytest.fixture(scope="session")
def bump1_spec():
    return CoefficientSpec(1, 1.0, SmoothBump(1.0, 1.0, 1.0))


@pytest.fixture(scope="session")
def bump1_dt(bump1_spec):
    return build_dual(bump1_spec)
