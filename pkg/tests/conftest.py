import os

import numpy as np
import pytest

from soiqe.coding import Dictionary

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
DATA = os.path.join(ROOT, "data")
TOY_DICT = os.path.join(DATA, "toy_dict_k128_l8.sopc")
SMOKE_MANIFEST = os.path.join(DATA, "smoke", "manifest.csv")

# filled by tests/test_acceptance.py, printed after the run
ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def toy_dictionary():
    return Dictionary.load(TOY_DICT)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
