import os

import pytest
from hypothesis import HealthCheck, settings

from forest_return import bundled_scenario

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile("thorough", deadline=None, max_examples=500)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def high():
    return bundled_scenario("douglas_fir_high")


@pytest.fixture(scope="session")
def low():
    return bundled_scenario("douglas_fir_low")


@pytest.fixture
def report_line(capsys):
    """Print one verdict line past pytest's capture."""

    def emit(label: str, ok: bool, detail: str = "") -> None:
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} {label}{': ' + detail if detail else ''}")

    return emit
