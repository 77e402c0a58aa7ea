import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from kmsproc.models import random_generator
from kmsproc.quasifree import thermal_context
from kmsproc.spectral import eigendecompose

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

LN3 = math.log(3.0)


def scalar_ctx(lam=1.0, beta=1.0):
    return thermal_context(eigendecompose(np.array([[lam]])), beta)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def ctx4(rng):
    return thermal_context(random_generator(rng, 4), 1.3)


# one summary line per acceptance criterion, filled by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])
