"""Shared fixtures. The long foliate shots are expensive, so they are
session-scoped and shared between the module tests and the acceptance
suite."""

import numpy as np
import pytest

from conelab import ConeSpec, make_foliate_family, shoot_foliate

LONG_R_MAX = 1050.0   # past r = 1e3 so tail checks have room


@pytest.fixture(scope="session")
def cone33():
    return ConeSpec(3, 3)


@pytest.fixture(scope="session")
def long_leaves():
    """Foliate leaves out to r > 1000 for the three benchmark cones."""
    out = {}
    for p, q in ((3, 3), (2, 4), (1, 6)):
        cone = ConeSpec(p, q)
        for sign in ("+", "-"):
            out[(p, q, sign)] = shoot_foliate(cone, sign, LONG_R_MAX,
                                              tol=1e-3)
    return out


@pytest.fixture(scope="session")
def leaf33(long_leaves):
    return long_leaves[(3, 3, "+")]


@pytest.fixture(scope="session")
def family33(cone33):
    return make_foliate_family(cone33, r_max=150.0)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260814)
