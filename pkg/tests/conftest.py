import os
import random

import pytest

from dlkv import parse_model

M2_SRC = """\
agents: a, b
domain: {0, 1, U}
var x@b
state t0 { x=0 }
state t1 { x=1 }
rel a: partition { {t0, t1} }
rel b: partition { {t0}, {t1} }
"""

ACCEPTANCE_LINES: list[str] = []


def suite_seed() -> int:
    return int(os.environ.get("DLKV_SEED", "1"))


@pytest.fixture
def seed() -> int:
    s = suite_seed()
    print(f"seed={s}")
    return s


@pytest.fixture
def rng(seed) -> random.Random:
    return random.Random(seed)


@pytest.fixture(scope="session")
def m2():
    """Two states; a cannot tell them apart, b can; x@b is 0 then 1."""
    return parse_model(M2_SRC)


def pytest_report_header(config):
    return f"DLKV_SEED={suite_seed()}"


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
