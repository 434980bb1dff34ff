import numpy as np
import pytest

from ballistic import ParticleSystem


def system(positions, speeds, **kw):
    return ParticleSystem(np.asarray(positions, float), np.asarray(speeds, float), **kw)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    module = __import__("sys").modules.get("test_acceptance")
    lines = getattr(module, "REPORT", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
