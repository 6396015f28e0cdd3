import numpy as np
import pytest

from grassbundle import ToleranceConfig

# Random instances are redrawn until cond([B_E | B_F]) <= 100; see grassbundle.verify.
GEN = ToleranceConfig(cond_cap=100.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def gen_cfg():
    return GEN


@pytest.fixture(params=["R", "C"])
def field(request):
    return request.param


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[number])
