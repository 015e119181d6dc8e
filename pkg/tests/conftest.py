import numpy as np
import pytest


def pytest_runtest_logreport(report):
    """One visible PASS/FAIL line per acceptance criterion."""
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    status = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")
    print(f"\n[ACCEPTANCE] {name}: {status}", flush=True)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
