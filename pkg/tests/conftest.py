import sys
from pathlib import Path

import pytest

from relcheck.relcore import Relation, StateSpace

TESTS = Path(__file__).resolve().parent
sys.path.insert(0, str(TESTS))

CORPUS = Path(__file__).resolve().parents[1] / "src" / "relcheck" / "corpus"


@pytest.fixture
def corpus():
    return CORPUS


def line_space(n, name="S"):
    """One variable ``s`` ranging over 0..n-1: state index == value."""
    return StateSpace([("s", 0, n - 1)], name=name)


def rel(space, pairs, dense=None):
    return Relation.from_pairs(space, [((a,), (b,)) for a, b in pairs], dense=dense)


def as_pairs(relation):
    return {(int(i), int(j)) for i, j in relation.pairs()}


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.report_lines():
        terminalreporter.write_line(line)
