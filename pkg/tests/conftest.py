import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "suite", max_examples=100, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("suite")


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def complex_matrix(rng, n, m=None):
    m = n if m is None else m
    return rng.normal(size=(n, m)) + 1j * rng.normal(size=(n, m))


_SESSION_START = {}


def pytest_sessionstart(session):
    import time

    _SESSION_START["t"] = time.perf_counter()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    import time

    elapsed = time.perf_counter() - _SESSION_START.get("t", time.perf_counter())
    ok = elapsed < 60.0 and exitstatus == 0
    terminalreporter.write_line(
        f"CRITERION 8 (suite runtime): {'PASS' if ok else 'FAIL'} - "
        f"{elapsed:.1f} s for the collected tests, exit status {int(exitstatus)}"
    )
