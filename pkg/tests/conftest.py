import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from imputebench.core import Dataset, generate_synthetic

settings.register_profile("default", deadline=None, max_examples=50,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def lowrank():
    return generate_synthetic("correlated-lowrank", 8, 120, noise_std=0.05, seed=1)


@pytest.fixture
def small():
    values = np.array([[1.0, 2.0, np.nan, 4.0, 5.0],
                       [2.0, np.nan, 6.0, 8.0, 10.0],
                       [0.5, 1.0, 1.5, np.nan, 2.5]])
    return Dataset.from_values(values)


def pytest_terminal_summary(terminalreporter):
    from reporting import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[number])
