import numpy as np
import pytest

from hrst import TransferConfig, random_network, tiny_layers

ACCEPTANCE_RESULTS = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def tiny_net():
    return random_network(tiny_layers(), seed=0)


@pytest.fixture(scope="session")
def tiny_cfg():
    return TransferConfig(style_layers=(1, 2, 3), content_layers=(2, 3), alpha=10.0, beta=1.0)


def cyclic_gradient(num_bins, height=64, width=64):
    rows = (np.arange(height) % num_bins + 0.5) / num_bins
    return np.repeat(rows[:, None], width, axis=1)[None]


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py" in report.nodeid:
        ACCEPTANCE_RESULTS.append((report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {name}")
