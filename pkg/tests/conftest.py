from __future__ import annotations

import json
import sys
from pathlib import Path

import pytest

TESTS = Path(__file__).resolve().parent
sys.path.insert(0, str(TESTS))

GOLDEN_TOL = 1e-8


def load_golden(name: str) -> dict:
    return json.loads((TESTS / "golden" / f"{name}.json").read_text())


@pytest.fixture(scope="session")
def golden6():
    return load_golden("heisenberg6")


@pytest.fixture(scope="session")
def golden4():
    return load_golden("heisenberg4")


@pytest.fixture(scope="session")
def arithmetic():
    return load_golden("arithmetic")


@pytest.fixture(scope="session")
def heis6():
    from lowtrot.lab import gallery_model

    return gallery_model("heisenberg_chain", 6)


@pytest.fixture(scope="session")
def heis4():
    from lowtrot.lab import gallery_model

    return gallery_model("heisenberg_chain", 4)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
