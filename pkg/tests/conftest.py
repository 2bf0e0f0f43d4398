import os

import numpy as np
import pytest

from krylov_calibration.experiment.matrices import builtin_matrix

BCSSTK14_ENV = "KRYLOV_BCSSTK14"

# one line per acceptance criterion, printed in the terminal summary
_ACCEPTANCE_LINES = []


def random_spd(n, kappa=1e2, seed=0):
    return builtin_matrix("rand-spd", n, kappa, seed)


def random_psd(n, rank, seed=0):
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((n, rank))
    return G @ G.T


def bcsstk14_path():
    path = os.environ.get(BCSSTK14_ENV)
    return path if path and os.path.isfile(path) else None


@pytest.fixture
def spd20():
    return random_spd(20, 1e2, 11)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_runtest_logreport(report):
    if report.when in ("call", "setup"):
        for key, value in report.user_properties:
            if key == "acceptance" and value not in _ACCEPTANCE_LINES:
                _ACCEPTANCE_LINES.append(value)


def _criterion_key(line):
    num = line.split()[1].rstrip(":")
    return int(num.split("-")[0]), num


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=_criterion_key):
            terminalreporter.write_line(line)
