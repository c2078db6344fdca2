import pathlib
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(pathlib.Path(__file__).parent))  # oracles.py importable

settings.register_profile(
    "default",
    deadline=None,
    max_examples=50,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

REPO = pathlib.Path(__file__).parents[1]


@pytest.fixture(scope="session")
def configs_dir() -> pathlib.Path:
    return REPO / "configs"


@pytest.fixture(scope="session")
def cable3():
    from evoreg import build_cable_operator

    return build_cable_operator(np.pi, 3)
