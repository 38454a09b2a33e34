import json
from pathlib import Path

import pytest

from _gen import ACCEPTANCE_LINES
from seclin.scheme import scheme_from_dict
from seclin.transform import secured_from_dict

SCHEMES = Path(__file__).resolve().parent.parent / "schemes"


@pytest.fixture
def ex1_doc():
    return json.loads((SCHEMES / "example1.json").read_text())


@pytest.fixture
def ex1(ex1_doc):
    return scheme_from_dict(ex1_doc)


@pytest.fixture
def ex1_int_secured():
    return secured_from_dict(json.loads((SCHEMES / "example1_secured_int.json").read_text()))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
