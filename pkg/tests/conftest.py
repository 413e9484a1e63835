import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def trend_series():
    r = np.random.default_rng(7)
    t = np.arange(120)
    return 200.0 + 1.5 * t + np.cumsum(r.normal(0, 1.0, t.size))


ACCEPTANCE: dict = {}


@pytest.fixture
def verdict():
    """Record ``(criterion, status, detail)`` for the end-of-run summary."""

    def record(number, status, detail):
        ACCEPTANCE.setdefault(number, []).append((status, detail))

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    rank = {"PASS": 0, "WARN": 1, "FAIL": 2}
    for number in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[number]
        status = max((s for s, _ in parts), key=rank.__getitem__)
        detail = "; ".join(d for _, d in parts)
        terminalreporter.write_line(f"criterion {number:>2}: {status}  {detail}")
