from __future__ import annotations

import pytest
from hypothesis import HealthCheck, settings

from tmcarve.corpus import corpus_entry

settings.register_profile(
    "default",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.filter_too_much],
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def circulation():
    return corpus_entry("circulation")


@pytest.fixture(scope="session")
def hospital():
    return corpus_entry("hospital")


@pytest.fixture(scope="session")
def coffee():
    return corpus_entry("coffee")


def pytest_terminal_summary(terminalreporter):
    acceptance = __import__("sys").modules.get("test_acceptance")
    results = getattr(acceptance, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        terminalreporter.write_line(results[number])
