from pathlib import Path

import pytest

from isct.graph import Task, TaskGraph, load_graph
from isct.power import load_platform, reference_platform

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"
GOLDEN = FIXTURES / "golden"


@pytest.fixture(scope="session")
def power():
    return reference_platform().power


@pytest.fixture(scope="session")
def fixture_power():
    return load_platform((FIXTURES / "platform.txt").read_text()).power


@pytest.fixture
def single():
    return TaskGraph((Task(1, 2_000_000),), (), 8e-3)


@pytest.fixture
def pair():
    return TaskGraph((Task(1, 2_000_000), Task(2, 2_000_000)), (), 8e-3)


@pytest.fixture
def tgff7():
    return load_graph((FIXTURES / "tgff7.txt").read_text())


# acceptance verdicts, filled in by test_acceptance and echoed at the end of the run
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
