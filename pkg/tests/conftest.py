import os
import sys

import pytest

sys.path.insert(0, os.path.join(os.path.dirname(os.path.dirname(
    os.path.abspath(__file__))), "src"))

from clawforge.corpus import builtin_models  # noqa: E402


@pytest.fixture(scope="session")
def models():
    return builtin_models()


@pytest.fixture(scope="session")
def kdv(models):
    return models["kdv"]


@pytest.fixture(scope="session")
def fw(models):
    return models["fw"]


@pytest.fixture(scope="session")
def sp(models):
    return models["sp"]


@pytest.fixture(scope="session")
def gas1d(models):
    return models["gas1d"]


@pytest.fixture(scope="session")
def gas3d(models):
    return models["gas3d"]
