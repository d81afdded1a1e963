import sys

import numpy as np
import pytest

from servoest.model import SpecimenParams, TransferSystemParams


def pytest_terminal_summary(terminalreporter):
    """Echo the acceptance-criterion verdicts after the test summary."""
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "VERDICT_LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def sp_actual():
    return SpecimenParams(m=3.8, c=10.0, k=1500.0, k_n=800.0, lam=250.0)


@pytest.fixture(scope="session")
def sp_nominal():
    return SpecimenParams(m=3.8, c=10.0, k=1500.0, k_n=1100.0, lam=250.0)


@pytest.fixture(scope="session")
def tp():
    return TransferSystemParams(beta1=267.0, a1beta1=2.412e9, a2=7.881e5,
                                a3=16.118, b=2.412e9 / 3.8)


@pytest.fixture(scope="session", autouse=True)
def _no_global_seed_leak():
    """Guard: nothing in the package may touch numpy's legacy global RNG."""
    state = np.random.get_state()
    yield
    after = np.random.get_state()
    assert state[0] == after[0] and np.array_equal(state[1], after[1])
