"""Shared fixtures for the Lubin-Tate tests"""

import os

import pytest

from lubin_tate.models import DeformationParams
from lubin_tate.oracle import solve_action
from lubin_tate.stabilizer import GroupElement, stabilizer_ring, unfold_action


def pytest_collection_modifyitems(config, items):
    """Skip tests marked heavy unless LUBIN_TATE_ALLOW_HEAVY=1"""
    if os.getenv("LUBIN_TATE_ALLOW_HEAVY", "").lower() in ("1", "true", "yes"):
        return
    skip_heavy = pytest.mark.skip(reason="set LUBIN_TATE_ALLOW_HEAVY=1 to run")
    for item in items:
        if "heavy" in item.keywords:
            item.add_marker(skip_heavy)


@pytest.fixture(scope="session")
def params33():
    return DeformationParams(p=3, h=3)


@pytest.fixture(scope="session")
def params_h2():
    return DeformationParams(p=3, h=2)


@pytest.fixture(scope="session")
def symbolic33(params33):
    return GroupElement.symbolic(stabilizer_ring(params33))


@pytest.fixture(scope="session")
def unfolded33(params33, symbolic33):
    return unfold_action(symbolic33, params33)


@pytest.fixture(scope="session")
def solved33(params33, symbolic33):
    return solve_action(symbolic33, params33)
