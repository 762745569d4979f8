import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "repo", max_examples=60, deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.filter_too_much])
settings.load_profile("repo")

GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
