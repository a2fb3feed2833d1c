"""Shared fixtures and the acceptance-summary report hook."""

import pytest

from jmscatter.quadrature import build_rule

_ACCEPTANCE_OUTCOMES = {}


@pytest.fixture(scope="session")
def rule100_l0():
    return build_rule(100, 0)


@pytest.fixture(scope="session")
def rule100_l1():
    return build_rule(100, 1)


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py" in report.nodeid:
        _ACCEPTANCE_OUTCOMES[report.nodeid] = report.outcome


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid in sorted(_ACCEPTANCE_OUTCOMES):
        name = nodeid.split("::")[-1]
        outcome = _ACCEPTANCE_OUTCOMES[nodeid].upper()
        terminalreporter.write_line(f"{name}: {outcome}")
