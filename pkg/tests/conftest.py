import functools

import pytest

from riccati_lpt import varopt
from riccati_lpt.model import PotentialSpec

TABLE_SPECS = [(1.0, 2.0), (0.0, 1.0), (-1.0, 2.0)]


@functools.lru_cache(maxsize=None)
def case1_result(m2, g):
    """Case-1 optimum, shared between test modules (the seeded search takes ~15 s)."""
    return varopt.case1_optimize(PotentialSpec(m2, g))


@pytest.fixture(params=TABLE_SPECS, ids=lambda s: f"m2={s[0]:g},g={s[1]:g}")
def table_spec(request):
    return request.param


# one summary line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")
