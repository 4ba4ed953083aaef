import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def rng():
    import numpy as np

    return np.random.default_rng(20240917)


@pytest.fixture(scope="session")
def table1():
    """Robustness of the two three-qubit magic cluster states over every catalog (computed once)."""
    from lambdaloc.cli import table1_values

    return table1_values()


ACCEPTANCE = {}


@pytest.fixture
def criterion():
    """Record one pass/fail line per acceptance criterion (printed in the terminal summary)."""

    def record(number, ok, detail):
        prev = ACCEPTANCE.get(number)
        ok = bool(ok) and (prev is None or prev[0])
        lines = ([prev[1]] if prev else []) + [detail]
        ACCEPTANCE[number] = (ok, "; ".join(lines))
        print(f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
