import functools

import pytest

from pairspec.femassembly import build_system
from pairspec.geometry import PairParameters, make_domain

_ACCEPTANCE_LINES = []


@functools.lru_cache(maxsize=None)
def system_for(kind, d=1.0, L=4.0, h=0.125, scale=1.0, sector="full", snapped=False):
    """Cached assembled system; meshes and matrices are immutable."""
    return build_system(make_domain(kind, PairParameters(d, L, h), scale, sector=sector, snapped=snapped))


@pytest.fixture
def acceptance_log():
    def record(criterion, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] {criterion}" + (f" -- {detail}" if detail else "")
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
