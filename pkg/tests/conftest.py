import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from mmpp_control.experiments import example_3_1, example_3_2

settings.register_profile("default", deadline=None, max_examples=50, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def ex31():
    return example_3_1()


@pytest.fixture(scope="session")
def ex32():
    return example_3_2()
