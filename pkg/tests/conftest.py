import numpy as np
import pytest

from diffaug.toy import gaussian_mixture

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def two_blobs():
    """Two well-separated 2-D classes, 100 samples each."""
    return gaussian_mixture(100, ((-3.0, 0.0), (3.0, 0.0)), 0.5, seed=7)
