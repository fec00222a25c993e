import pytest
from hypothesis import HealthCheck, settings

from conelab.varmodel import bundled_instance

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def toy():
    return bundled_instance("toy-vertical")


@pytest.fixture(scope="session")
def i2():
    return bundled_instance("i2-chain")


@pytest.fixture(scope="session")
def quadric():
    return bundled_instance("quadric-net")


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        ok, note = RESULTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {note}")
