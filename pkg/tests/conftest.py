from __future__ import annotations

from typing import Dict, List, Tuple

import pytest

from twoselmer import harness
from twoselmer.curves import CurveModel

# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES: List[Tuple[int, str]] = []

CASE_IV_HEIGHTS = (10**3, 10**4, 10**5)


@pytest.fixture(scope="session")
def case_iv_sweeps() -> Dict[int, harness.SweepResult]:
    """Sweeps of y^2 = x^3 + 5x^2 + 5x over the class of d0 = 1, shared across test files."""
    E = CurveModel(5, 5)
    spec = harness.TwistClassSpec.for_curve(E, 1)
    return {H: harness.sweep(E, spec, H) for H in CASE_IV_HEIGHTS}


def pytest_terminal_summary(terminalreporter, exitstatus, config) -> None:
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
