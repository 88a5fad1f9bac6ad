import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("repo", deadline=None, derandomize=True, print_blob=True)
settings.load_profile("repo")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
