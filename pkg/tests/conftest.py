import pytest

import oracles
from moap.conflict import build_demand_conflict_graph, build_offer_conflict_graph
from moap.core import validate_instance


@pytest.fixture
def sample():
    return validate_instance(oracles.sample_raw())


@pytest.fixture
def sample_graphs(sample):
    g = build_offer_conflict_graph(sample)
    return g, build_demand_conflict_graph(g)



ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record one summary line per acceptance criterion, then assert it."""

    def record(number: int, ok: bool, detail: str):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
