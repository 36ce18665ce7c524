import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=50,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

A_STAR = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 2.0]])


@pytest.fixture
def a_star():
    return A_STAR.copy()


def random_instance(rng, n, m):
    """Standard normal n x m matrix (full row rank with probability one)."""
    return rng.standard_normal((n, m))


def zero_based(*one_based):
    return tuple(i - 1 for i in one_based)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(mod.RESULTS):
        passed, detail = mod.RESULTS[num]
        terminalreporter.write_line(f"criterion {num:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
