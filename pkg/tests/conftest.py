import pytest

from nutrifront.limits import SweepScenario
from nutrifront.pde import simulate

SWEEP_EPS = (0.1, 0.05, 0.025)

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_log():
    return _ACCEPTANCE_LINES


@pytest.fixture(scope="session")
def default_sweep():
    """(scenario, {eps: (init, record)}) for the default step scenario."""
    sc = SweepScenario()
    runs = {}
    for eps in SWEEP_EPS:
        init = sc.initial_data(eps)
        runs[eps] = (init, simulate(sc.params(eps), init, sc.scheme()))
    return sc, runs


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
