"""Acceptance battery: one test per criterion, at the pinned tolerances.

Each test prints its PASS/FAIL line (visible with ``pytest -s`` or in the
captured output of a failure); the full battery is also runnable as
``shiftheat report``. Heavy shared state (spectra, traces, the oracle run)
is memoized on a session-scoped context.
"""

import pytest

from shiftheat.acceptance import CRITERIA, AcceptanceContext, run_criteria


@pytest.fixture(scope="session")
def ctx():
    return AcceptanceContext()


@pytest.mark.parametrize("number,name", [(num, name) for num, name, _, _ in CRITERIA],
                         ids=[f"c{num:02d}_{name.replace(' ', '_')}"
                              for num, name, _, _ in CRITERIA])
def test_criterion(ctx, number, name):
    result = run_criteria(numbers={number}, ctx=ctx, verbose=True)[0]
    assert result.passed, result.line()
